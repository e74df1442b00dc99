"""Reconstruction algorithms and quality metrics.

Solves min_x 0.5 * ||M F x - y||^2 + lambda * ||W x||_1 by (fast) iterative
soft-thresholding, where F is the unitary DFT, M the line mask, and W the
orthonormal Haar transform. Because F is unitary and M binary, the gradient
of the data term has Lipschitz constant exactly 1, so the step size is fixed
at 1 and ISTA's objective trace is non-increasing.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from cloudmri.acquisition import SamplingMask, unitary_dft2, unitary_idft2
from cloudmri.recon import wavelets
from cloudmri.recon.wavelets import NonPowerOfTwoSize

ALGORITHMS = ("zero_filled", "ista", "fista")


class ReconError(Exception):
    pass


class ShapeMismatch(ReconError):
    pass


class ZeroReference(ReconError):
    pass


class InvalidParams(ReconError):
    pass


@dataclass
class ReconParams:
    """Algorithm selection and tuning knobs; the JSON wire key for the
    l1 weight is "lambda"."""

    algorithm: str = "fista"
    l1_weight: float = 0.01
    max_iters: int = 200
    tol: float = 1e-6
    wavelet_levels: int = 2

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidParams(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.l1_weight < 0:
            raise InvalidParams(f"lambda must be >= 0, got {self.l1_weight}")
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise InvalidParams(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if not self.tol > 0:
            raise InvalidParams(f"tol must be > 0, got {self.tol}")
        if not isinstance(self.wavelet_levels, int) or self.wavelet_levels < 1:
            raise InvalidParams(f"wavelet_levels must be an integer >= 1, got {self.wavelet_levels!r}")

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "lambda": self.l1_weight,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "wavelet_levels": self.wavelet_levels,
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "ReconParams":
        known = {"algorithm", "lambda", "max_iters", "tol", "wavelet_levels"}
        unknown = set(spec) - known
        if unknown:
            raise InvalidParams(f"unknown recon parameters: {sorted(unknown)}")
        params = cls(
            algorithm=spec.get("algorithm", "fista"),
            l1_weight=float(spec.get("lambda", 0.01)),
            max_iters=int(spec.get("max_iters", 200)),
            tol=float(spec.get("tol", 1e-6)),
            wavelet_levels=int(spec.get("wavelet_levels", 2)),
        )
        params.validate()
        return params

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class ReconResult:
    image: np.ndarray
    complex_image: np.ndarray
    iterations_used: int
    objective_trace: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0


@dataclass
class Metrics:
    nrmse: float
    psnr_db: float


def _check_shapes(y: np.ndarray, mask: SamplingMask) -> np.ndarray:
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2:
        raise ShapeMismatch(f"k-space grid must be 2D, got shape {y.shape}")
    if y.shape[0] != mask.height:
        raise ShapeMismatch(f"mask height {mask.height} != k-space height {y.shape[0]}")
    return y


def _masked(k: np.ndarray, sampled: np.ndarray) -> np.ndarray:
    out = k.copy()
    out[~sampled, :] = 0
    return out


def zero_filled_recon(y: np.ndarray, mask: SamplingMask) -> ReconResult:
    """Baseline: zero the unacquired lines, inverse unitary DFT, magnitude."""
    start = time.perf_counter()
    y = _check_shapes(y, mask)
    x = unitary_idft2(_masked(y, mask.sampled))
    return ReconResult(
        image=np.abs(x),
        complex_image=x,
        iterations_used=0,
        objective_trace=[],
        wall_seconds=time.perf_counter() - start,
    )


def cs_recon(y: np.ndarray, mask: SamplingMask, params: ReconParams) -> ReconResult:
    """Compressed-sensing reconstruction by ISTA or FISTA.

    Starts from the zero-filled image. Each iteration takes a unit gradient
    step on the data term, then soft-thresholds the Haar coefficients by
    lambda (complex magnitude shrinkage). FISTA adds the standard
    t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2 extrapolation. Stops when the
    relative image change drops below tol or after max_iters iterations.
    """
    start = time.perf_counter()
    params.validate()
    if params.algorithm == "zero_filled":
        return zero_filled_recon(y, mask)
    y = _check_shapes(y, mask)
    wavelets.check_transform_size(y.shape, params.wavelet_levels)

    sampled = mask.sampled
    lam = params.l1_weight
    levels = params.wavelet_levels
    y_obs = _masked(y, sampled)

    x = unitary_idft2(y_obs)
    z = x
    t = 1.0
    momentum = params.algorithm == "fista"
    trace: list[float] = []
    iterations = 0

    for _ in range(params.max_iters):
        x_prev = x
        residual = _masked(unitary_dft2(z), sampled) - y_obs
        g = z - unitary_idft2(residual)
        w = wavelets.soft_threshold(wavelets.forward(g, levels), lam)
        x = wavelets.inverse(w, levels)
        if momentum:
            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            z = x + ((t - 1.0) / t_next) * (x - x_prev)
            t = t_next
        else:
            z = x
        iterations += 1
        trace.append(_objective(x, y_obs, sampled, lam, levels))
        prev_norm = np.linalg.norm(x_prev)
        step_norm = np.linalg.norm(x - x_prev)
        if prev_norm > 0:
            if step_norm / prev_norm < params.tol:
                break
        elif step_norm == 0:
            break

    return ReconResult(
        image=np.abs(x),
        complex_image=x,
        iterations_used=iterations,
        objective_trace=trace,
        wall_seconds=time.perf_counter() - start,
    )


def _objective(x, y_obs, sampled, lam, levels) -> float:
    residual = _masked(unitary_dft2(x), sampled) - y_obs
    value = 0.5 * float(np.linalg.norm(residual) ** 2)
    if lam > 0:
        value += lam * wavelets.l1_norm(wavelets.forward(x, levels))
    return value


def image_metrics(x: np.ndarray, ref: np.ndarray) -> Metrics:
    """NRMSE = ||x - ref|| / ||ref||; PSNR = 20 log10(max(ref) / rmse), with
    +inf as the distinguished value for an exact match."""
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if x.shape != ref.shape:
        raise ShapeMismatch(f"image shape {x.shape} != reference shape {ref.shape}")
    ref_norm = np.linalg.norm(ref)
    if ref_norm == 0:
        raise ZeroReference("reference image is all zeros")
    err_norm = np.linalg.norm(x - ref)
    nrmse = float(err_norm / ref_norm)
    rmse = err_norm / np.sqrt(ref.size)
    psnr = float("inf") if rmse == 0 else float(20.0 * np.log10(ref.max() / rmse))
    return Metrics(nrmse=nrmse, psnr_db=psnr)


def estimated_compute_units(max_iters: int, matrix_x: int, matrix_y: int) -> float:
    """Crude monotone work proxy used for scheduling and simulated timing."""
    return max_iters * matrix_x * matrix_y / 1e6


def benchmark_local_vs_cloud(dataset, mask: SamplingMask, params: ReconParams,
                             nodes, reference: np.ndarray | None = None) -> list[dict]:
    """Run one reconstruction and project its cost onto each node profile.

    The image is identical across nodes by construction (same algorithm, same
    inputs); only the simulated transfer and compute times differ. Each row:
    {node_id, kind, transfer_s, compute_s, total_s, nrmse}.
    """
    from cloudmri.acquisition import kspace_from_dataset
    from cloudmri.raw_format import encode_dataset
    from cloudmri.transport import estimate_transfer_time

    nodes = list(nodes)
    if len(nodes) < 2:
        raise ValueError("benchmark needs at least two node profiles")
    container = encode_dataset(dataset)
    y = kspace_from_dataset(dataset)
    result = cs_recon(y, mask, params)
    nrmse = image_metrics(result.image, reference).nrmse if reference is not None else None
    units = estimated_compute_units(
        params.max_iters, dataset.header.matrix_x, dataset.header.matrix_y
    )
    rows = []
    for node in nodes:
        transfer_s = estimate_transfer_time(len(container), node.profile)
        compute_s = units / node.compute_rate_units_per_s
        rows.append(
            {
                "node_id": node.node_id,
                "kind": getattr(node, "kind", ""),
                "transfer_s": transfer_s,
                "compute_s": compute_s,
                "total_s": transfer_s + compute_s,
                "nrmse": nrmse,
            }
        )
    return rows
