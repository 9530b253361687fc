"""Central finite differences for verifying reverse-mode gradients."""

from __future__ import annotations

import numpy as np

STEP = 1e-5
REL_TOL = 1e-4
REL_FLOOR = 1e-5


def central_difference(f, x: np.ndarray, step: float = STEP) -> np.ndarray:
    """Elementwise d f / d x for scalar-valued f, by symmetric differences."""
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    flat, gflat = x.ravel(), grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = float(f(x))
        flat[i] = orig - step
        lo = float(f(x))
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * step)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray,
                  floor: float = REL_FLOOR) -> float:
    a = np.asarray(analytic, dtype=float)
    b = np.asarray(numeric, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))
