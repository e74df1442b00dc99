"""NumPy implementations of the hot reconstruction kernels.

This is the fallback backend; `_haar_cy` is the compiled twin with identical
semantics. Argument validation happens in `wavelets`, not here.
"""

import numpy as np

BACKEND = "numpy"

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _analyze_level(block):
    a = (block[0::2, :] + block[1::2, :]) * _INV_SQRT2
    d = (block[0::2, :] - block[1::2, :]) * _INV_SQRT2
    rows = np.concatenate([a, d], axis=0)
    a2 = (rows[:, 0::2] + rows[:, 1::2]) * _INV_SQRT2
    d2 = (rows[:, 0::2] - rows[:, 1::2]) * _INV_SQRT2
    return np.concatenate([a2, d2], axis=1)


def _synthesize_level(block):
    half = block.shape[1] // 2
    rows = np.empty_like(block)
    rows[:, 0::2] = (block[:, :half] + block[:, half:]) * _INV_SQRT2
    rows[:, 1::2] = (block[:, :half] - block[:, half:]) * _INV_SQRT2
    half = block.shape[0] // 2
    out = np.empty_like(block)
    out[0::2, :] = (rows[:half, :] + rows[half:, :]) * _INV_SQRT2
    out[1::2, :] = (rows[:half, :] - rows[half:, :]) * _INV_SQRT2
    return out


def haar2_forward(x, levels):
    """Orthonormal 2D Haar analysis; approximation band ends up in the
    shrinking top-left block."""
    out = np.array(x, dtype=np.complex128, copy=True)
    size = out.shape[0]
    for _ in range(levels):
        out[:size, :size] = _analyze_level(out[:size, :size])
        size //= 2
    return out


def haar2_inverse(w, levels):
    out = np.array(w, dtype=np.complex128, copy=True)
    size = out.shape[0] >> (levels - 1)
    for _ in range(levels):
        out[:size, :size] = _synthesize_level(out[:size, :size])
        size *= 2
    return out


def soft_threshold(w, lam):
    """Complex soft-threshold: shrink magnitudes by lam, preserve phase."""
    mag = np.abs(w)
    scale = np.where(mag > lam, (mag - lam) / np.where(mag > 0, mag, 1.0), 0.0)
    return w * scale
