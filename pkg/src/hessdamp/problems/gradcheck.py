"""Central finite-difference gradient checks."""

from __future__ import annotations

import numpy as np

from ..core import Objective


def fd_gradient(f: Objective, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central differences, one coordinate at a time, with step ``step * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += e
        xm[i] -= e
        g[i] = (f.value(xp) - f.value(xm)) / (xp[i] - xm[i])
    return g


def relative_gradient_error(f: Objective, x: np.ndarray, step: float = 1e-6) -> float:
    g = np.asarray(f.grad(x), dtype=float)
    g_fd = fd_gradient(f, x, step)
    scale = max(np.linalg.norm(g), np.linalg.norm(g_fd), 1e-12)
    return float(np.linalg.norm(g - g_fd) / scale)


def max_gradient_error(f: Objective, points, step: float = 1e-6) -> float:
    """Worst relative error ``|g - g_fd| / max(|g|, |g_fd|)`` over ``points``."""
    return max(relative_gradient_error(f, p, step) for p in points)
