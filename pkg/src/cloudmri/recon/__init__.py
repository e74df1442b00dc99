"""Image reconstruction: zero-filled baseline, ISTA/FISTA compressed sensing
with an orthonormal Haar sparsifier, quality metrics, and the local-vs-cloud
benchmark harness."""

from cloudmri.recon.engine import (
    Metrics,
    NonPowerOfTwoSize,
    ReconError,
    ReconParams,
    ReconResult,
    ShapeMismatch,
    ZeroReference,
    benchmark_local_vs_cloud,
    cs_recon,
    estimated_compute_units,
    image_metrics,
    zero_filled_recon,
)
from cloudmri.recon.wavelets import KERNEL_BACKEND

__all__ = [
    "Metrics",
    "NonPowerOfTwoSize",
    "ReconError",
    "ReconParams",
    "ReconResult",
    "ShapeMismatch",
    "ZeroReference",
    "benchmark_local_vs_cloud",
    "cs_recon",
    "estimated_compute_units",
    "image_metrics",
    "zero_filled_recon",
    "KERNEL_BACKEND",
]
