"""The service object behind both the REST API and the CLI.

Hosts the object store, hash-chain ledger, monitor, and orchestrator in one
process; simulated compute nodes run as an internal worker thread. Job and
review registries persist as JSON in the storage directory so one-shot CLI
invocations see each other's state. Time is simulated: uploads and job runs
advance the shared clock by their modeled transfer/compute seconds.

Ledger discipline: every decision (allow or deny) leaves one entry via
check_access, and every stored object (rawdata, image, report) is referenced
by at least one UPLOAD/RECON/REVIEW entry carrying its content hash. Decision
entries for not-yet-materialized resources use the resource-class marker hash
(SHA-256 of the class name).
"""

from __future__ import annotations

import hashlib
import json
import queue
import threading
import time

import numpy as np

from cloudmri.acquisition import (
    SIM_VENDOR,
    generate_phantom,
    kspace_from_dataset,
    mask_from_spec,
)
from cloudmri.clock import SimClock
from cloudmri.gateway.config import GatewayConfig
from cloudmri.gateway.storage import ObjectNotFound, ObjectStore, StorageError
from cloudmri.ledger import Ledger, check_access
from cloudmri.monitor import Monitor
from cloudmri.orchestrator import (
    NoHealthyNode,
    Orchestrator,
    ReconJob,
)
from cloudmri.raw_format import RawFormatError, decode_dataset
from cloudmri.recon import (
    NonPowerOfTwoSize,
    ReconError,
    ReconParams,
    cs_recon,
    estimated_compute_units,
    image_metrics,
)
from cloudmri.recon.wavelets import check_transform_size
from cloudmri.transport import (
    AuthenticationFailure,
    SealedBlob,
    TransportError,
    estimate_transfer_time,
    unseal,
)

TERMINAL_STATES = ("DONE", "FAILED")

#: Decision entries for resources that do not exist yet carry these hashes.
CLASS_MARKER_HASHES = {
    cls: hashlib.sha256(cls.encode()).digest() for cls in ("rawdata", "image", "report", "model")
}


class GatewayError(Exception):
    status = 500


class BadRequest(GatewayError):
    status = 400


class Denied(GatewayError):
    status = 403


class NotFound(GatewayError):
    status = 404


class GatewayService:
    def __init__(self, config: GatewayConfig, start_worker: bool = True):
        self.config = config
        config.storage_dir.mkdir(parents=True, exist_ok=True)
        self._clock_path = config.storage_dir / "clock.json"
        self.clock = SimClock(self._load_clock())
        self.store = ObjectStore(config.storage_dir / "objects")
        self.ledger = Ledger(config.storage_dir / "ledger.log")
        self.monitor = Monitor(
            deny_burst_threshold=config.monitor.deny_burst_threshold,
            deny_burst_window_s=config.monitor.deny_burst_window_s,
            rate_zscore_threshold=config.monitor.rate_zscore_threshold,
            rate_window_minutes=config.monitor.rate_window_minutes,
        )
        self.orchestrator = Orchestrator(
            heartbeat_interval_s=config.heartbeat_interval_s,
            missed_heartbeats=config.missed_heartbeats,
            on_event=lambda kind, source, detail: self.monitor.record(
                self.clock.now(), kind, source, detail
            ),
        )
        for node in config.fleet:
            self.orchestrator.register_node(node, now=self.clock.now())
        self.monitor.register_gauge_source(
            lambda: {
                f"jobs_{state.lower()}": count
                for state, count in self.orchestrator.jobs_by_state().items()
            }
        )

        self._jobs_path = config.storage_dir / "jobs.json"
        self._reviews_path = config.storage_dir / "reviews.json"
        self._registry_lock = threading.Lock()
        self._jobs: dict[str, dict] = {}
        self._job_counter = 0
        self._reviews: dict[str, str] = {}
        self._review_tokens: dict[str, str] = {}
        self._load_registries()

        self._queue: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._worker = None
        self._requeue_unfinished()
        if start_worker:
            self._worker = threading.Thread(target=self._worker_loop, daemon=True)
            self._worker.start()

    # -- lifecycle -------------------------------------------------------------

    def close(self) -> None:
        self._stop.set()
        self._queue.put(None)
        if self._worker is not None:
            self._worker.join(timeout=10)
        self._save_clock()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _load_clock(self) -> float:
        if self._clock_path.is_file():
            return float(json.loads(self._clock_path.read_text())["now"])
        return 0.0

    def _save_clock(self) -> None:
        self._clock_path.write_text(json.dumps({"now": self.clock.now()}))

    def _advance_clock(self, seconds: float) -> None:
        now = self.clock.advance(seconds)
        for node in self.orchestrator.nodes():
            self.orchestrator.heartbeat(node.node_id, now)
        self._save_clock()

    def _load_registries(self) -> None:
        if self._jobs_path.is_file():
            data = json.loads(self._jobs_path.read_text())
            self._jobs = data.get("jobs", {})
            self._job_counter = data.get("counter", len(self._jobs))
        if self._reviews_path.is_file():
            data = json.loads(self._reviews_path.read_text())
            self._reviews = data.get("reviews", {})
            self._review_tokens = data.get("tokens", {})

    def _save_jobs(self) -> None:
        self._jobs_path.write_text(
            json.dumps({"counter": self._job_counter, "jobs": self._jobs}, indent=1)
        )

    def _save_reviews(self) -> None:
        self._reviews_path.write_text(
            json.dumps({"reviews": self._reviews, "tokens": self._review_tokens})
        )

    def _requeue_unfinished(self) -> None:
        """Jobs left non-terminal by a previous process resume here."""
        for job_id, record in self._jobs.items():
            if record["state"] not in TERMINAL_STATES:
                job = ReconJob(
                    job_id=job_id,
                    dataset_hash=bytes.fromhex(record["dataset_id"]),
                    byte_count=record["byte_count"],
                    params=ReconParams.from_dict(record["params"]),
                    compute_units=record["compute_units"],
                )
                record["state"] = "QUEUED"
                record["node"] = None
                self.orchestrator.submit(job)
                self._queue.put(job_id)

    # -- uploads ---------------------------------------------------------------

    def upload_dataset(self, actor: str, sealed_bytes: bytes, key_id: str,
                       profile_name: str | None = None) -> dict:
        """Unseal, decode, store content-addressed, and audit one upload."""
        profile = self.config.profiles.get(profile_name or self.config.default_profile)
        if profile is None:
            raise BadRequest(f"unknown network profile {profile_name!r}")
        ts = int(self.clock.now())
        if not check_access(self.config.policy, actor, "UPLOAD", "rawdata", ts,
                            self.ledger, CLASS_MARKER_HASHES["rawdata"]):
            self.monitor.record(self.clock.now(), "DENY", actor, "UPLOAD rawdata")
            raise Denied(f"actor {actor!r} may not upload raw data")
        key = self.config.keys.get(key_id)
        if key is None:
            raise BadRequest(f"unknown key id {key_id!r}")
        try:
            container = unseal(key, SealedBlob.from_bytes(sealed_bytes))
        except (AuthenticationFailure, TransportError) as exc:
            raise BadRequest(f"unseal failed: {exc}") from exc
        try:
            decode_dataset(container)
        except RawFormatError as exc:
            raise BadRequest(f"container rejected: {exc}") from exc
        try:
            dataset_id = self.store.put(container, "rawdata", self.clock.now())
        except StorageError as exc:
            raise GatewayError(f"persistence failure: {exc}") from exc
        self.ledger.append(actor, "UPLOAD", bytes.fromhex(dataset_id), ts)
        self.monitor.record(self.clock.now(), "UPLOAD", actor, dataset_id)
        transfer_s = estimate_transfer_time(len(container), profile)
        self._advance_clock(transfer_s)
        return {
            "dataset_id": dataset_id,
            "byte_count": len(container),
            "simulated_transfer_s": transfer_s,
        }

    # -- jobs --------------------------------------------------------------------

    def submit_job(self, actor: str, dataset_id: str, params_spec: dict | None,
                   mask_spec: dict) -> str:
        ts = int(self.clock.now())
        resource = bytes.fromhex(dataset_id) if _is_object_id(dataset_id) else \
            CLASS_MARKER_HASHES["rawdata"]
        if not check_access(self.config.policy, actor, "RECON", "rawdata", ts,
                            self.ledger, resource):
            self.monitor.record(self.clock.now(), "DENY", actor, f"RECON {dataset_id}")
            raise Denied(f"actor {actor!r} may not start reconstructions")
        if not self.store.exists(dataset_id):
            raise NotFound(f"no dataset {dataset_id!r}")
        try:
            params = ReconParams.from_dict(params_spec or {})
        except (ReconError, ValueError, TypeError) as exc:
            raise BadRequest(f"invalid params: {exc}") from exc
        container = self.store.get(dataset_id)
        dataset = decode_dataset(container.data)
        try:
            mask = mask_from_spec(mask_spec)
        except Exception as exc:
            raise BadRequest(f"invalid mask spec: {exc}") from exc
        if mask.height != dataset.header.matrix_y:
            raise BadRequest(
                f"mask has {mask.height} lines, dataset has {dataset.header.matrix_y}"
            )
        if params.algorithm != "zero_filled":
            try:
                check_transform_size(
                    (dataset.header.matrix_y, dataset.header.matrix_x), params.wavelet_levels
                )
            except NonPowerOfTwoSize as exc:
                raise BadRequest(str(exc)) from exc

        with self._registry_lock:
            self._job_counter += 1
            job_id = f"job-{self._job_counter:06d}"
            units = estimated_compute_units(
                params.max_iters, dataset.header.matrix_x, dataset.header.matrix_y
            )
            job = ReconJob(
                job_id=job_id,
                dataset_hash=bytes.fromhex(dataset_id),
                byte_count=len(container.data),
                params=params,
                compute_units=units,
            )
            self.orchestrator.submit(job)
            self._jobs[job_id] = {
                "job_id": job_id,
                "actor": actor,
                "dataset_id": dataset_id,
                "byte_count": len(container.data),
                "compute_units": units,
                "params": params.to_dict(),
                "mask_spec": dict(mask_spec),
                "state": "QUEUED",
                "node": None,
                "attempt": 1,
                "image_id": None,
                "metrics": None,
                "error": None,
            }
            self._save_jobs()
        self._queue.put(job_id)
        return job_id

    def job_status(self, job_id: str) -> dict:
        with self._registry_lock:
            record = self._jobs.get(job_id)
            if record is None:
                raise NotFound(f"no job {job_id!r}")
            return dict(record)

    def wait_for_job(self, job_id: str, timeout_s: float = 60.0) -> dict:
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            record = self.job_status(job_id)
            if record["state"] in TERMINAL_STATES:
                return record
            time.sleep(0.01)
        return self.job_status(job_id)

    def list_jobs(self) -> list[dict]:
        with self._registry_lock:
            return [dict(r) for r in self._jobs.values()]

    def _worker_loop(self) -> None:
        while not self._stop.is_set():
            job_id = self._queue.get()
            if job_id is None:
                continue
            try:
                self._run_job(job_id)
            except Exception as exc:  # worker must survive any job failure
                self._record_job_failure(job_id, f"worker error: {exc}")

    def _update_job(self, job_id: str, **changes) -> None:
        with self._registry_lock:
            self._jobs[job_id].update(changes)
            self._save_jobs()

    def _record_job_failure(self, job_id: str, message: str) -> None:
        self.monitor.record(self.clock.now(), "RECON_FAIL", "gateway", job_id)
        self._update_job(job_id, state="FAILED", error=message)

    def _run_job(self, job_id: str) -> None:
        try:
            node_id = self.orchestrator.assign(job_id)
        except NoHealthyNode:
            if not self._stop.is_set():
                time.sleep(0.05)
                self._queue.put(job_id)
            return
        job = self.orchestrator.get_job(job_id)
        attempt = job.attempt
        self._update_job(job_id, state="ASSIGNED", node=node_id, attempt=attempt)
        if not self.orchestrator.mark_running(job_id, node_id, attempt):
            return
        self._update_job(job_id, state="RUNNING")

        record = self.job_status(job_id)
        node = next(n for n in self.orchestrator.nodes() if n.node_id == node_id)
        try:
            container = self.store.get(record["dataset_id"])
            dataset = decode_dataset(container.data)
            mask = mask_from_spec(record["mask_spec"])
            params = ReconParams.from_dict(record["params"])
            result = cs_recon(kspace_from_dataset(dataset), mask, params)
        except Exception as exc:
            self.orchestrator.complete_job(job_id, node_id, None, attempt, error=str(exc))
            self._update_job(job_id, state="FAILED", error=str(exc))
            return

        metrics = {
            "iterations_used": result.iterations_used,
            "wall_seconds": result.wall_seconds,
            "nrmse": None,
        }
        header = dataset.header
        if header.vendor == SIM_VENDOR and header.matrix_x == header.matrix_y:
            reference = generate_phantom(header.matrix_x)
            metrics["nrmse"] = image_metrics(result.image, reference).nrmse

        payload = {
            "width": int(result.image.shape[1]),
            "height": int(result.image.shape[0]),
            "pixels": [float(v) for v in np.ravel(result.image)],
            "meta": {
                "job_id": job_id,
                "algorithm": record["params"]["algorithm"],
                "dataset_id": record["dataset_id"],
                "nrmse": metrics["nrmse"],
            },
        }
        image_bytes = json.dumps(payload, separators=(",", ":")).encode("utf-8")
        image_id = self.store.put(image_bytes, "image", self.clock.now())

        transfer_s = estimate_transfer_time(record["byte_count"], node.profile)
        compute_s = record["compute_units"] / node.compute_rate_units_per_s
        self._advance_clock(transfer_s + compute_s)
        committed = self.orchestrator.complete_job(job_id, node_id, image_id, attempt)
        if committed:
            self.ledger.append(
                record["actor"], "RECON", bytes.fromhex(image_id), int(self.clock.now())
            )
            self._update_job(
                job_id, state="DONE", image_id=image_id, metrics=metrics,
                simulated_transfer_s=transfer_s, simulated_compute_s=compute_s,
            )

    # -- images ------------------------------------------------------------------

    def get_image(self, actor: str, image_id: str) -> dict:
        ts = int(self.clock.now())
        resource = bytes.fromhex(image_id) if _is_object_id(image_id) else \
            CLASS_MARKER_HASHES["image"]
        if not check_access(self.config.policy, actor, "ACCESS", "image", ts,
                            self.ledger, resource):
            self.monitor.record(self.clock.now(), "DENY", actor, f"ACCESS {image_id}")
            raise Denied(f"actor {actor!r} may not read images")
        try:
            stored = self.store.get(image_id)
        except ObjectNotFound as exc:
            raise NotFound(str(exc)) from exc
        if stored.kind != "image":
            raise NotFound(f"object {image_id!r} is not an image")
        return json.loads(stored.data.decode("utf-8"))

    # -- reviews -----------------------------------------------------------------

    def submit_review(self, actor: str, review: dict, client_token: str | None = None) -> str:
        ts = int(self.clock.now())
        if not check_access(self.config.policy, actor, "REVIEW", "report", ts,
                            self.ledger, CLASS_MARKER_HASHES["report"]):
            self.monitor.record(self.clock.now(), "DENY", actor, "REVIEW report")
            raise Denied(f"actor {actor!r} may not submit reviews")
        if client_token and client_token in self._review_tokens:
            return self._review_tokens[client_token]

        image_id = review.get("image_id")
        if not image_id or not self.store.exists(image_id):
            raise BadRequest(f"review references unknown image {image_id!r}")
        score = review.get("score")
        if not isinstance(score, int) or not 1 <= score <= 5:
            raise BadRequest(f"score must be an integer in 1..5, got {score!r}")
        image = json.loads(self.store.get(image_id).data.decode("utf-8"))
        labels = review.get("labels", [])
        for label in labels:
            if not all(isinstance(label.get(k), int) for k in ("x", "y", "w", "h")):
                raise BadRequest(f"label coordinates must be integers: {label!r}")
            if (
                label["x"] < 0 or label["y"] < 0 or label["w"] < 1 or label["h"] < 1
                or label["x"] + label["w"] > image["width"]
                or label["y"] + label["h"] > image["height"]
            ):
                raise BadRequest(f"label out of image bounds: {label!r}")

        content = {
            "image_id": image_id,
            "reviewer": actor,
            "score": score,
            "labels": [
                {"x": l["x"], "y": l["y"], "w": l["w"], "h": l["h"], "text": str(l.get("text", ""))}
                for l in labels
            ],
            "report": str(review.get("report", "")),
        }
        blob = json.dumps(content, sort_keys=True, separators=(",", ":")).encode("utf-8")
        review_id = self.store.put(blob, "report", self.clock.now())
        with self._registry_lock:
            if review_id not in self._reviews:
                self._reviews[review_id] = review_id
                self.ledger.append(actor, "REVIEW", bytes.fromhex(review_id), ts)
                self.monitor.record(self.clock.now(), "REVIEW", actor, review_id)
            if client_token:
                self._review_tokens[client_token] = review_id
            self._save_reviews()
        return review_id

    def get_review(self, review_id: str) -> dict:
        try:
            stored = self.store.get(review_id)
        except ObjectNotFound as exc:
            raise NotFound(str(exc)) from exc
        if stored.kind != "report":
            raise NotFound(f"object {review_id!r} is not a review")
        content = json.loads(stored.data.decode("utf-8"))
        content["review_id"] = review_id
        return content

    # -- audit and metrics ---------------------------------------------------------

    def verify_ledger(self) -> dict:
        return self.ledger.verify().to_dict()

    def metrics(self) -> dict:
        return self.monitor.metrics_snapshot()

    def detect_anomalies(self) -> list:
        return self.monitor.detect_anomalies(self.clock.now())


def _is_object_id(value: str) -> bool:
    if not isinstance(value, str) or len(value) != 64:
        return False
    try:
        bytes.fromhex(value)
    except ValueError:
        return False
    return True
