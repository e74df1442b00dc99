"""Timing comparison of the compiled kernels against the NumPy fallback."""

from __future__ import annotations

import time

import numpy as np

from cloudmri.recon import _wavelets_py


def _load_backends() -> dict:
    backends = {"numpy": _wavelets_py}
    try:
        from cloudmri.recon import _haar_cy

        backends["cython"] = _haar_cy
    except ImportError:
        pass
    return backends


def _time_prox(backend, x, levels: int, lam: float, reps: int) -> float:
    """Seconds per forward + threshold + inverse pass (the per-iteration
    wavelet work of the CS loop), best of reps."""
    best = float("inf")
    for _ in range(reps):
        start = time.perf_counter()
        w = backend.haar2_forward(x, levels)
        w = backend.soft_threshold(w, lam)
        backend.haar2_inverse(w, levels)
        best = min(best, time.perf_counter() - start)
    return best


def kernel_benchmark(size: int = 256, reps: int = 20, levels: int = 2,
                     lam: float = 0.01, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    backends = _load_backends()
    timings = {
        name: _time_prox(module, x, levels, lam, reps)
        for name, module in backends.items()
    }
    result = {
        "size": size,
        "levels": levels,
        "reps": reps,
        "seconds_per_prox": timings,
        "compiled_available": "cython" in backends,
    }
    if "cython" in timings:
        result["speedup_cython_over_numpy"] = timings["numpy"] / timings["cython"]
    return result
