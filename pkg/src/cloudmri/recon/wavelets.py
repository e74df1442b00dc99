"""Orthonormal 2D Haar transform and complex soft-threshold.

The heavy loops live in one of two interchangeable backends: the compiled
extension `_haar_cy` (preferred) or the NumPy module `_wavelets_py`. The
choice is made once at import; set CLOUDMRI_PURE_KERNELS=1 to force the
NumPy path (used by the kernel benchmark and parity tests).
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("CLOUDMRI_PURE_KERNELS"):
    from cloudmri.recon import _wavelets_py as _backend
else:
    try:
        from cloudmri.recon import _haar_cy as _backend  # type: ignore[no-redef]
    except ImportError:
        from cloudmri.recon import _wavelets_py as _backend

KERNEL_BACKEND: str = _backend.BACKEND


class NonPowerOfTwoSize(Exception):
    """Haar with L levels needs both image sides divisible by 2**L."""


def check_transform_size(shape: tuple[int, ...], levels: int) -> None:
    if levels < 1:
        raise NonPowerOfTwoSize(f"wavelet_levels must be >= 1, got {levels}")
    block = 1 << levels
    if any(side % block != 0 or side < block for side in shape):
        raise NonPowerOfTwoSize(
            f"image sides {shape} must be divisible by 2**levels = {block}"
        )


def forward(x: np.ndarray, levels: int) -> np.ndarray:
    check_transform_size(x.shape, levels)
    return _backend.haar2_forward(x, levels)


def inverse(w: np.ndarray, levels: int) -> np.ndarray:
    check_transform_size(w.shape, levels)
    return _backend.haar2_inverse(w, levels)


def soft_threshold(w: np.ndarray, lam: float) -> np.ndarray:
    if lam < 0:
        raise ValueError(f"threshold must be >= 0, got {lam}")
    if lam == 0:
        return np.array(w, dtype=np.complex128, copy=True)
    return _backend.soft_threshold(w, lam)


def l1_norm(w: np.ndarray) -> float:
    return float(np.abs(w).sum())
