"""Cross-hospital training by parameter averaging.

The model is a linear map trained with full-batch gradient descent on each
hospital's private (input, target) pairs; only flat parameter vectors and
sample counts ever enter federation messages, which is what the transcript's
type system enforces and the privacy tests scan for. With one local epoch the
weighted average is algebraically identical to a centralized gradient step on
the pooled data.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from cloudmri.acquisition import generate_phantom, forward_kspace, make_mask, apply_mask, unitary_idft2

PAYLOAD_KINDS = ("params", "sample_count")


class FederatedError(Exception):
    pass


class DimensionMismatch(FederatedError):
    pass


class EmptyReportSet(FederatedError):
    pass


@dataclass
class ModelParams:
    """Flat parameter vector for a square linear map; values must stay finite."""

    values: np.ndarray
    version: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(self.values)):
            raise FederatedError("model parameters must be finite")

    def digest(self) -> bytes:
        return hashlib.sha256(self.values.astype("<f8").tobytes()).digest()


@dataclass
class HospitalNode:
    """Holder of private training pairs; nothing here is ever serialized into
    federation messages."""

    hospital_id: str
    local_pairs: list[tuple[np.ndarray, np.ndarray]]

    @property
    def n_samples(self) -> int:
        return len(self.local_pairs)


@dataclass(frozen=True)
class TranscriptMessage:
    round: int
    direction: str  # broadcast | report
    hospital_id: str
    payload_kind: str  # params | sample_count
    payload: object

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "direction": self.direction,
            "hospital_id": self.hospital_id,
            "payload_kind": self.payload_kind,
            "payload": self.payload,
        }


@dataclass
class RoundResult:
    params: ModelParams
    transcript: list[TranscriptMessage]
    global_loss: float


def _weight_matrix(params: ModelParams, in_dim: int, out_dim: int) -> np.ndarray:
    if params.values.size != in_dim * out_dim:
        raise DimensionMismatch(
            f"{params.values.size} parameters cannot form a {out_dim}x{in_dim} map"
        )
    return params.values.reshape(out_dim, in_dim)


def _dims(node: HospitalNode) -> tuple[int, int]:
    if not node.local_pairs:
        raise FederatedError(f"hospital {node.hospital_id!r} has no samples")
    x0, y0 = node.local_pairs[0]
    return len(np.ravel(x0)), len(np.ravel(y0))


def local_loss(params: ModelParams, node: HospitalNode) -> float:
    """Mean over local pairs of 0.5 * ||W x - y||^2."""
    in_dim, out_dim = _dims(node)
    w = _weight_matrix(params, in_dim, out_dim)
    total = 0.0
    for x, y in node.local_pairs:
        r = w @ np.ravel(x) - np.ravel(y)
        total += 0.5 * float(r @ r)
    return total / node.n_samples


def local_gradient(params: ModelParams, node: HospitalNode) -> np.ndarray:
    in_dim, out_dim = _dims(node)
    w = _weight_matrix(params, in_dim, out_dim)
    grad = np.zeros_like(w)
    for x, y in node.local_pairs:
        x = np.ravel(x)
        grad += np.outer(w @ x - np.ravel(y), x)
    return (grad / node.n_samples).ravel()


def local_train(params: ModelParams, node: HospitalNode, epochs: int,
                learning_rate: float) -> ModelParams:
    """epochs full-batch gradient steps on the local mean loss; deterministic."""
    if epochs < 1:
        raise FederatedError(f"epochs must be >= 1, got {epochs}")
    if learning_rate < 0:
        raise FederatedError(f"learning_rate must be >= 0, got {learning_rate}")
    values = params.values.copy()
    current = ModelParams(values=values, version=params.version)
    for _ in range(epochs):
        current = ModelParams(
            values=current.values - learning_rate * local_gradient(current, node),
            version=params.version,
        )
    return current


def fed_avg(reports: list[tuple[ModelParams, int]]) -> ModelParams:
    """Element-wise mean weighted by sample counts; bumps the version."""
    if not reports:
        raise EmptyReportSet("no reports to average")
    dim = reports[0][0].values.size
    version = reports[0][0].version
    total = sum(n for _, n in reports)
    if total <= 0:
        raise FederatedError("total sample count must be positive")
    acc = np.zeros(dim)
    for params, n in reports:
        if params.values.size != dim:
            raise DimensionMismatch(
                f"report has {params.values.size} parameters, expected {dim}"
            )
        acc += (n / total) * params.values
    return ModelParams(values=acc, version=version + 1)


def run_round(
    hospitals: list[HospitalNode],
    global_params: ModelParams,
    epochs: int,
    learning_rate: float,
    round_index: int = 0,
    dropouts: set[str] | None = None,
    ledger=None,
    actor_id: str = "fed-coordinator",
    timestamp: int = 0,
) -> RoundResult:
    """Broadcast, train locally, average the reports, and log the update.

    Hospitals named in ``dropouts`` receive the broadcast but never report;
    the average renormalizes over those that did. Every message is recorded in
    the transcript, and the new parameter hash goes to the audit ledger when
    one is supplied.
    """
    if not hospitals:
        raise FederatedError("need at least one hospital")
    dropouts = dropouts or set()
    transcript: list[TranscriptMessage] = []
    reports: list[tuple[ModelParams, int]] = []
    for node in hospitals:
        transcript.append(
            TranscriptMessage(
                round=round_index,
                direction="broadcast",
                hospital_id=node.hospital_id,
                payload_kind="params",
                payload=global_params.values.tolist(),
            )
        )
    for node in hospitals:
        if node.hospital_id in dropouts:
            continue
        trained = local_train(global_params, node, epochs, learning_rate)
        transcript.append(
            TranscriptMessage(
                round=round_index,
                direction="report",
                hospital_id=node.hospital_id,
                payload_kind="params",
                payload=trained.values.tolist(),
            )
        )
        transcript.append(
            TranscriptMessage(
                round=round_index,
                direction="report",
                hospital_id=node.hospital_id,
                payload_kind="sample_count",
                payload=node.n_samples,
            )
        )
        reports.append((trained, node.n_samples))
    if not reports:
        raise EmptyReportSet(f"all hospitals dropped out of round {round_index}")
    new_global = fed_avg(reports)
    weights = sum(node.n_samples for node in hospitals)
    global_loss = (
        sum(node.n_samples * local_loss(new_global, node) for node in hospitals) / weights
    )
    if ledger is not None:
        ledger.append(
            actor_id=actor_id,
            action="MODEL_UPDATE",
            resource_hash=new_global.digest(),
            timestamp=timestamp,
        )
    return RoundResult(params=new_global, transcript=transcript, global_loss=global_loss)


def serialize_transcript(transcript: list[TranscriptMessage]) -> bytes:
    return json.dumps([m.to_dict() for m in transcript]).encode("utf-8")


def make_hospital(
    hospital_id: str,
    n_samples: int,
    seed: int,
    strip_len: int = 4,
    image_size: int = 32,
    acceleration: float = 2.0,
) -> HospitalNode:
    """Synthetic private data: inputs are pixel strips from an undersampled
    zero-filled reconstruction, targets the matching phantom strips. Each
    hospital gets a distinct mask seed, so local data differ."""
    phantom = generate_phantom(image_size)
    k = forward_kspace(phantom, noise_sigma=0.0, seed=seed)
    mask = make_mask(
        "random_lines_center", image_size, acceleration=acceleration,
        center_fraction=0.08, seed=seed,
    )
    degraded = np.abs(unitary_idft2(apply_mask(k, mask)))
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_samples):
        row = int(rng.integers(0, image_size))
        col = int(rng.integers(0, image_size - strip_len + 1))
        pairs.append(
            (degraded[row, col : col + strip_len].copy(),
             phantom[row, col : col + strip_len].copy())
        )
    return HospitalNode(hospital_id=hospital_id, local_pairs=pairs)


@dataclass
class FederationConfig:
    """JSON shape: {hospitals: [{hospital_id, n_samples, seed}], epochs,
    learning_rate, rounds, model_dim}. model_dim must be a perfect square
    (the model maps strips of sqrt(model_dim) pixels to strips of the same
    length)."""

    hospitals: list[dict]
    epochs: int = 1
    learning_rate: float = 0.05
    rounds: int = 10
    model_dim: int = 16

    @classmethod
    def from_dict(cls, spec: dict) -> "FederationConfig":
        config = cls(
            hospitals=list(spec["hospitals"]),
            epochs=int(spec.get("epochs", 1)),
            learning_rate=float(spec.get("learning_rate", 0.05)),
            rounds=int(spec.get("rounds", 10)),
            model_dim=int(spec.get("model_dim", 16)),
        )
        root = math.isqrt(config.model_dim)
        if root * root != config.model_dim:
            raise FederatedError(
                f"model_dim must be a perfect square, got {config.model_dim}"
            )
        return config


def run_federation(config: FederationConfig, ledger=None, clock=None,
                   actor_id: str = "fed-coordinator") -> dict:
    """Full multi-round simulation from a config; returns a summary with the
    per-round global losses and the final parameter digest."""
    strip_len = math.isqrt(config.model_dim)
    hospitals = [
        make_hospital(
            hospital_id=spec["hospital_id"],
            n_samples=int(spec["n_samples"]),
            seed=int(spec.get("seed", i)),
            strip_len=strip_len,
        )
        for i, spec in enumerate(config.hospitals)
    ]
    params = ModelParams(values=np.zeros(config.model_dim), version=0)
    losses = []
    messages = 0
    for r in range(config.rounds):
        timestamp = int(clock.now()) if clock is not None else r
        result = run_round(
            hospitals,
            params,
            epochs=config.epochs,
            learning_rate=config.learning_rate,
            round_index=r,
            ledger=ledger,
            actor_id=actor_id,
            timestamp=timestamp,
        )
        params = result.params
        losses.append(result.global_loss)
        messages += len(result.transcript)
        if clock is not None:
            clock.advance(1.0)
    return {
        "rounds": config.rounds,
        "hospitals": [h.hospital_id for h in hospitals],
        "global_losses": losses,
        "final_version": params.version,
        "final_params_sha256": params.digest().hex(),
        "transcript_messages": messages,
    }
