"""Node fleet registry and job state machine.

Jobs move QUEUED -> ASSIGNED -> RUNNING -> DONE | FAILED, with a requeue edge
(attempt + 1) out of ASSIGNED/RUNNING when the hosting node dies. Execution is
at-least-once; result commitment is exactly-once (stale completions are
acknowledged and discarded by attempt matching). All mutations are serialized
through one lock; simulated workers interact only via method calls.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

from cloudmri.recon.engine import ReconParams
from cloudmri.transport import NetworkProfile, estimate_transfer_time

JOB_STATES = ("QUEUED", "ASSIGNED", "RUNNING", "DONE", "FAILED")
NODE_KINDS = ("cloud", "edge")

DEFAULT_HEARTBEAT_INTERVAL_S = 5.0
DEFAULT_MISSED_HEARTBEATS = 3


class OrchestratorError(Exception):
    pass


class DuplicateNodeId(OrchestratorError):
    pass


class UnknownNode(OrchestratorError):
    pass


class UnknownJob(OrchestratorError):
    pass


class DuplicateJobId(OrchestratorError):
    pass


class NoHealthyNode(OrchestratorError):
    pass


class IllegalTransition(OrchestratorError):
    pass


@dataclass
class NodeDescriptor:
    node_id: str
    kind: str
    compute_rate_units_per_s: float
    profile: NetworkProfile
    healthy: bool = True
    backlog_s: float = 0.0
    last_heartbeat: float = 0.0

    def __post_init__(self):
        if not self.node_id:
            raise OrchestratorError("node_id must be non-empty")
        if self.kind not in NODE_KINDS:
            raise OrchestratorError(f"kind must be one of {NODE_KINDS}, got {self.kind!r}")
        if self.compute_rate_units_per_s <= 0:
            raise OrchestratorError("compute_rate_units_per_s must be positive")


@dataclass
class ReconJob:
    job_id: str
    dataset_hash: bytes
    byte_count: int
    params: ReconParams
    compute_units: float
    state: str = "QUEUED"
    assigned_node: str | None = None
    attempt: int = 1
    result_ref: str | None = None
    error: str | None = None


def fleet_from_config(specs: list[dict]) -> list[NodeDescriptor]:
    """Fleet config JSON: [{node_id, kind, compute_rate_units_per_s, profile}]."""
    return [
        NodeDescriptor(
            node_id=spec["node_id"],
            kind=spec["kind"],
            compute_rate_units_per_s=float(spec["compute_rate_units_per_s"]),
            profile=NetworkProfile.from_dict(spec["profile"]),
        )
        for spec in specs
    ]


def fleet_from_json(path) -> list[NodeDescriptor]:
    with open(path) as fh:
        return fleet_from_config(json.load(fh))


def assignment_cost(job: ReconJob, node: NodeDescriptor) -> float:
    """Transfer + queued backlog + compute seconds if the job ran on node."""
    return (
        estimate_transfer_time(job.byte_count, node.profile)
        + node.backlog_s
        + job.compute_units / node.compute_rate_units_per_s
    )


def choose_node(job: ReconJob, nodes) -> str:
    """Argmin of assignment_cost over healthy nodes, ties to smallest id."""
    best_id = None
    best_cost = None
    for node in nodes:
        if not node.healthy:
            continue
        cost = assignment_cost(job, node)
        if best_cost is None or cost < best_cost or (cost == best_cost and node.node_id < best_id):
            best_id, best_cost = node.node_id, cost
    if best_id is None:
        raise NoHealthyNode("no healthy node in fleet")
    return best_id


class Orchestrator:
    """Single-writer scheduler state; see module docstring for the contract."""

    def __init__(
        self,
        heartbeat_interval_s: float = DEFAULT_HEARTBEAT_INTERVAL_S,
        missed_heartbeats: int = DEFAULT_MISSED_HEARTBEATS,
        on_event=None,
    ):
        self._lock = threading.Lock()
        self._nodes: dict[str, NodeDescriptor] = {}
        self._jobs: dict[str, ReconJob] = {}
        self.heartbeat_interval_s = heartbeat_interval_s
        self.missed_heartbeats = missed_heartbeats
        # on_event(kind, source, detail) with kind from the monitor's event set
        self._on_event = on_event or (lambda kind, source, detail: None)

    # -- fleet ---------------------------------------------------------------

    def register_node(self, node: NodeDescriptor, now: float = 0.0) -> None:
        with self._lock:
            if node.node_id in self._nodes:
                raise DuplicateNodeId(f"node {node.node_id!r} already registered")
            node.healthy = True
            node.backlog_s = 0.0
            node.last_heartbeat = now
            self._nodes[node.node_id] = node

    def nodes(self) -> list[NodeDescriptor]:
        with self._lock:
            return list(self._nodes.values())

    def heartbeat(self, node_id: str, timestamp: float) -> None:
        """Also revives a node that was marked unhealthy; its old jobs stay
        requeued (dedup by attempt keeps stale results harmless)."""
        with self._lock:
            node = self._nodes.get(node_id)
            if node is None:
                raise UnknownNode(f"unknown node {node_id!r}")
            node.last_heartbeat = max(node.last_heartbeat, timestamp)
            node.healthy = True

    def detect_failures(self, now: float) -> list[str]:
        """Mark nodes silent for missed_heartbeats * interval as unhealthy and
        requeue their in-flight jobs with attempt + 1."""
        failed = []
        with self._lock:
            deadline = self.missed_heartbeats * self.heartbeat_interval_s
            for node in self._nodes.values():
                if node.healthy and now - node.last_heartbeat > deadline:
                    node.healthy = False
                    failed.append(node.node_id)
                    for job in self._jobs.values():
                        if job.assigned_node == node.node_id and job.state in ("ASSIGNED", "RUNNING"):
                            node.backlog_s -= job.compute_units / node.compute_rate_units_per_s
                            job.state = "QUEUED"
                            job.assigned_node = None
                            job.attempt += 1
        for node_id in failed:
            self._on_event("NODE_DOWN", node_id, "missed heartbeats")
        return failed

    # -- jobs ----------------------------------------------------------------

    def submit(self, job: ReconJob) -> None:
        with self._lock:
            if job.job_id in self._jobs:
                raise DuplicateJobId(f"job {job.job_id!r} already submitted")
            if job.state != "QUEUED":
                raise IllegalTransition("jobs enter the orchestrator QUEUED")
            self._jobs[job.job_id] = job

    def get_job(self, job_id: str) -> ReconJob:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(f"unknown job {job_id!r}")
            return job

    def jobs(self) -> list[ReconJob]:
        with self._lock:
            return list(self._jobs.values())

    def next_queued(self) -> ReconJob | None:
        with self._lock:
            for job in self._jobs.values():
                if job.state == "QUEUED":
                    return job
            return None

    def assign(self, job_id: str) -> str:
        """Place a QUEUED job on the cheapest healthy node (ties: smallest
        node_id) and add its compute seconds to that node's backlog."""
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(f"unknown job {job_id!r}")
            if job.state != "QUEUED":
                raise IllegalTransition(f"cannot assign job in state {job.state}")
            node_id = choose_node(job, self._nodes.values())
            node = self._nodes[node_id]
            node.backlog_s += job.compute_units / node.compute_rate_units_per_s
            job.state = "ASSIGNED"
            job.assigned_node = node_id
            return node_id

    def mark_running(self, job_id: str, node_id: str, attempt: int) -> bool:
        """False (stale) when the attempt was requeued in the meantime."""
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(f"unknown job {job_id!r}")
            if job.state == "ASSIGNED" and job.assigned_node == node_id and job.attempt == attempt:
                job.state = "RUNNING"
                return True
            return False

    def complete_job(self, job_id: str, node_id: str, result_ref: str | None,
                     attempt: int, error: str | None = None) -> bool:
        """First completion for the current attempt wins; everything else is
        acknowledged and discarded. Returns True iff this call committed."""
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(f"unknown job {job_id!r}")
            live = (
                job.state == "RUNNING"
                and job.assigned_node == node_id
                and job.attempt == attempt
            )
            if not live:
                return False
            node = self._nodes.get(node_id)
            if node is not None:
                node.backlog_s -= job.compute_units / node.compute_rate_units_per_s
            job.state = "FAILED" if error is not None else "DONE"
            job.result_ref = result_ref
            job.error = error
        kind = "RECON_FAIL" if error is not None else "RECON_DONE"
        self._on_event(kind, node_id, job_id)
        return True

    # -- introspection ---------------------------------------------------------

    def backlog_violations(self, tolerance: float = 1e-9) -> list[str]:
        """Nodes whose backlog disagrees with their in-flight jobs' compute
        terms; used by tests after every transition."""
        with self._lock:
            expected = {node_id: 0.0 for node_id in self._nodes}
            for job in self._jobs.values():
                if job.state in ("ASSIGNED", "RUNNING") and job.assigned_node in expected:
                    node = self._nodes[job.assigned_node]
                    expected[job.assigned_node] += job.compute_units / node.compute_rate_units_per_s
            return [
                f"{node_id}: backlog {self._nodes[node_id].backlog_s} != expected {value}"
                for node_id, value in expected.items()
                if abs(self._nodes[node_id].backlog_s - value) > tolerance
            ]

    def jobs_by_state(self) -> dict[str, int]:
        with self._lock:
            counts = {state: 0 for state in JOB_STATES}
            for job in self._jobs.values():
                counts[job.state] += 1
            return counts
