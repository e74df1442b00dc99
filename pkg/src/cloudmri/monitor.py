"""Event collection, counters, and anomaly detection.

Two detectors run over the recorded stream: a rule that fires a high alert
when one source racks up K DENY events inside a W-second window, and a
statistical check that compares the current minute's total event count
against the trailing half hour (z-score). Detection works on snapshots and
never blocks writers; alerts are de-duplicated by evidence, so one burst
fires exactly once no matter how often detection runs.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass, field

EVENT_KINDS = ("DENY", "UPLOAD", "RECON_DONE", "RECON_FAIL", "NODE_DOWN", "HEARTBEAT", "REVIEW")

BURST_RULE = "unauthorized-access-burst"
RATE_RULE = "rate-anomaly"


class MonitorError(Exception):
    pass


@dataclass(frozen=True)
class Event:
    timestamp: float
    kind: str
    source: str
    detail: str = ""


@dataclass
class Alert:
    rule_name: str
    severity: str  # info | warning | high
    window: tuple[float, float]
    evidence: list[Event] = field(default_factory=list)


class Monitor:
    def __init__(
        self,
        deny_burst_threshold: int = 3,
        deny_burst_window_s: float = 60.0,
        rate_zscore_threshold: float = 3.0,
        rate_window_minutes: int = 30,
    ):
        self.deny_burst_threshold = deny_burst_threshold
        self.deny_burst_window_s = deny_burst_window_s
        self.rate_zscore_threshold = rate_zscore_threshold
        self.rate_window_minutes = rate_window_minutes
        self._lock = threading.Lock()
        self._events: list[Event] = []
        self._event_counts: Counter = Counter()
        self._alerts: list[Alert] = []
        self._alert_counts: Counter = Counter()
        self._consumed_denies: set[int] = set()  # indexes into _events
        self._fired_rate_minutes: set[int] = set()
        self._gauge_sources: list = []

    def record_event(self, event: Event) -> None:
        if event.kind not in EVENT_KINDS:
            raise MonitorError(f"unknown event kind {event.kind!r}")
        with self._lock:
            self._events.append(event)
            self._event_counts[event.kind] += 1

    def record(self, timestamp: float, kind: str, source: str, detail: str = "") -> None:
        self.record_event(Event(timestamp=timestamp, kind=kind, source=source, detail=detail))

    def events(self) -> list[Event]:
        with self._lock:
            return list(self._events)

    def alerts(self) -> list[Alert]:
        with self._lock:
            return list(self._alerts)

    def detect_anomalies(self, now: float) -> list[Alert]:
        """Run both detectors; returns only alerts new to this call."""
        with self._lock:
            snapshot = list(self._events)
        new_alerts = self._detect_deny_bursts(snapshot)
        rate_alert = self._detect_rate_anomaly(snapshot, now)
        if rate_alert is not None:
            new_alerts.append(rate_alert)
        with self._lock:
            self._alerts.extend(new_alerts)
            for alert in new_alerts:
                self._alert_counts[alert.rule_name] += 1
        return new_alerts

    def _detect_deny_bursts(self, snapshot: list[Event]) -> list[Alert]:
        by_source: dict[str, list[tuple[int, Event]]] = {}
        for i, event in enumerate(snapshot):
            if event.kind == "DENY" and i not in self._consumed_denies:
                by_source.setdefault(event.source, []).append((i, event))
        alerts = []
        for denies in by_source.values():
            window: list[tuple[int, Event]] = []
            for item in denies:
                window.append(item)
                while item[1].timestamp - window[0][1].timestamp > self.deny_burst_window_s:
                    window.pop(0)
                if len(window) >= self.deny_burst_threshold:
                    evidence = [e for _, e in window]
                    alerts.append(
                        Alert(
                            rule_name=BURST_RULE,
                            severity="high",
                            window=(evidence[0].timestamp, evidence[-1].timestamp),
                            evidence=evidence,
                        )
                    )
                    self._consumed_denies.update(i for i, _ in window)
                    window = []
        return alerts

    def _detect_rate_anomaly(self, snapshot: list[Event], now: float) -> Alert | None:
        if not snapshot:
            return None
        current_minute = math.floor(now / 60.0)
        if current_minute in self._fired_rate_minutes:
            return None
        first_minute = math.floor(min(e.timestamp for e in snapshot) / 60.0)
        baseline_start = current_minute - self.rate_window_minutes
        if first_minute > baseline_start:
            return None  # not enough history for a baseline
        per_minute = Counter(math.floor(e.timestamp / 60.0) for e in snapshot)
        baseline = [per_minute.get(m, 0) for m in range(baseline_start, current_minute)]
        mean = sum(baseline) / len(baseline)
        variance = sum((v - mean) ** 2 for v in baseline) / len(baseline)
        std = math.sqrt(variance)
        if std <= 0:
            return None
        count = per_minute.get(current_minute, 0)
        z = (count - mean) / std
        if z <= self.rate_zscore_threshold:
            return None
        evidence = [
            e for e in snapshot if math.floor(e.timestamp / 60.0) == current_minute
        ]
        self._fired_rate_minutes.add(current_minute)
        return Alert(
            rule_name=RATE_RULE,
            severity="warning",
            window=(current_minute * 60.0, now),
            evidence=evidence,
        )

    # -- metrics ---------------------------------------------------------------

    def register_gauge_source(self, source) -> None:
        """source() -> dict of counter name to value, merged into snapshots."""
        with self._lock:
            self._gauge_sources.append(source)

    def metrics_snapshot(self) -> dict[str, float]:
        """Point-in-time copy: per-kind event counts, per-rule alert counts,
        and any registered gauges (e.g. jobs by state)."""
        with self._lock:
            snapshot: dict[str, float] = {}
            for kind in EVENT_KINDS:
                snapshot[f"events_{kind.lower()}"] = self._event_counts.get(kind, 0)
            for rule in (BURST_RULE, RATE_RULE):
                snapshot[f"alerts_{rule.replace('-', '_')}"] = self._alert_counts.get(rule, 0)
            sources = list(self._gauge_sources)
        for source in sources:
            for name, value in source().items():
                snapshot[name] = value
        return snapshot
