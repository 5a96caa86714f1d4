"""Blur and finite-difference operators on 2-D images, and the deblurring objective.

Images are float arrays of shape ``(rows, cols)``. Solvers see them flattened
column-major (``order="F"``); see :func:`image_to_point` / :func:`point_to_image`.
Both the blur and the difference operators use a Neumann (replicate-edge)
boundary, and each has an exact adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import Objective


def gaussian_kernel(size: int = 5, sigma: float = 1.5) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be odd")
    r = size // 2
    t = np.arange(-r, r + 1, dtype=float)
    g = np.exp(-0.5 * (t / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def _check_kernel(kernel) -> np.ndarray:
    k = np.asarray(kernel, dtype=float)
    if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise ValueError("kernel must be a 2-D array with odd sizes")
    return k


def blur_apply(kernel, u: np.ndarray) -> np.ndarray:
    """Correlate ``u`` with ``kernel`` after replicate-padding the edges."""
    k = _check_kernel(kernel)
    u = np.asarray(u, dtype=float)
    ry, rx = k.shape[0] // 2, k.shape[1] // 2
    n, m = u.shape
    padded = np.pad(u, ((ry, ry), (rx, rx)), mode="edge")
    out = np.zeros_like(u)
    for p in range(k.shape[0]):
        for q in range(k.shape[1]):
            if k[p, q] != 0:
                out += k[p, q] * padded[p:p + n, q:q + m]
    return out


def blur_adjoint(kernel, v: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`blur_apply`: scatter, then fold the padding back onto the edges."""
    k = _check_kernel(kernel)
    v = np.asarray(v, dtype=float)
    ry, rx = k.shape[0] // 2, k.shape[1] // 2
    n, m = v.shape
    w = np.zeros((n + 2 * ry, m + 2 * rx))
    for p in range(k.shape[0]):
        for q in range(k.shape[1]):
            if k[p, q] != 0:
                w[p:p + n, q:q + m] += k[p, q] * v
    # adjoint of edge padding: every padded cell maps to its nearest interior cell
    if ry:
        w[ry, :] += w[:ry, :].sum(axis=0)
        w[ry + n - 1, :] += w[ry + n:, :].sum(axis=0)
    if rx:
        w[:, rx] += w[:, :rx].sum(axis=1)
        w[:, rx + m - 1] += w[:, rx + m:].sum(axis=1)
    return w[ry:ry + n, rx:rx + m].copy()


def kx_apply(u: np.ndarray) -> np.ndarray:
    """Horizontal forward difference ``u[i, j+1] - u[i, j]``; last column is zero."""
    out = np.zeros_like(u, dtype=float)
    out[:, :-1] = u[:, 1:] - u[:, :-1]
    return out


def kx_adjoint(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=float)
    out[:, :-1] -= p[:, :-1]
    out[:, 1:] += p[:, :-1]
    return out


def ky_apply(u: np.ndarray) -> np.ndarray:
    """Vertical forward difference ``u[i+1, j] - u[i, j]``; last row is zero."""
    out = np.zeros_like(u, dtype=float)
    out[:-1, :] = u[1:, :] - u[:-1, :]
    return out


def ky_adjoint(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=float)
    out[:-1, :] -= p[:-1, :]
    out[1:, :] += p[:-1, :]
    return out


def image_to_point(u: np.ndarray) -> np.ndarray:
    return np.asarray(u, dtype=float).ravel(order="F")


def point_to_image(x: np.ndarray, shape) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(shape, order="F")


def operator_norm(apply, adjoint, shape, n_iter: int = 100, seed: int = 0) -> float:
    """Largest singular value of a linear image operator by power iteration."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(shape)
    u /= np.linalg.norm(u)
    sigma2 = 0.0
    for _ in range(n_iter):
        w = adjoint(apply(u))
        sigma2 = float(np.linalg.norm(w))
        if sigma2 == 0:
            return 0.0
        u = w / sigma2
    return float(np.sqrt(sigma2))


def phantom(size: int = 256) -> np.ndarray:
    """Piecewise-constant test image with values in ``[0, 1]``."""
    n = int(size)
    yy, xx = np.mgrid[0:n, 0:n] / n
    img = np.full((n, n), 0.1)
    img[(xx > 0.1) & (xx < 0.45) & (yy > 0.15) & (yy < 0.55)] = 0.8
    img[(xx - 0.68) ** 2 + (yy - 0.35) ** 2 < 0.2 ** 2] = 0.55
    img[(xx - 0.68) ** 2 + (yy - 0.35) ** 2 < 0.08 ** 2] = 1.0
    img[(np.abs(xx - 0.3) + np.abs(yy - 0.78) < 0.15)] = 0.35
    img[(xx > 0.55) & (xx < 0.9) & (yy > 0.7) & (yy < 0.76)] = 0.95
    return img


def synthesize_observation(u_true: np.ndarray, kernel, noise_sigma: float = 0.01,
                           seed: int = 0) -> np.ndarray:
    """Blur ``u_true`` and add i.i.d. zero-mean Gaussian noise."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    b = blur_apply(kernel, u_true)
    if noise_sigma > 0:
        b = b + noise_sigma * np.random.default_rng(seed).standard_normal(b.shape)
    return b


@dataclass(frozen=True)
class DeblurProblem:
    """Blur kernel, observation ``b`` and regularization weights ``mu``, ``rho``."""

    kernel: np.ndarray
    b: np.ndarray
    mu: float = 5e-5
    rho: float = 1e-3

    def __post_init__(self):
        k = _check_kernel(self.kernel)
        if np.any(k < 0) or not np.isclose(k.sum(), 1.0, rtol=1e-12):
            raise ValueError("kernel must be nonnegative and sum to 1")
        if not (self.mu > 0 and self.rho > 0):
            raise ValueError("mu and rho must be positive")
        if not np.all(np.isfinite(self.b)):
            raise ValueError("observation has non-finite pixels")

    @property
    def shape(self):
        return np.shape(self.b)


def deblur_objective(p: DeblurProblem, *, lipschitz: bool = True) -> Objective:
    """``f(u) = 1/2 |Au - b|^2 + mu/2 sum log(rho + (Kx u)^2 + (Ky u)^2)``.

    Gradient: ``A^T(Au - b) + mu (Kx^T(Kx u / m) + Ky^T(Ky u / m))`` with
    ``m = rho + (Kx u)^2 + (Ky u)^2``. The attached Lipschitz constant is
    ``|A|^2 + 2 mu/rho (|Kx|^2 + |Ky|^2)`` with norms from power iteration.
    """
    shape = p.shape
    k, b, mu, rho = np.asarray(p.kernel, float), np.asarray(p.b, float), p.mu, p.rho

    def value(x):
        u = point_to_image(x, shape)
        r = blur_apply(k, u) - b
        gx, gy = kx_apply(u), ky_apply(u)
        return 0.5 * np.sum(r * r) + 0.5 * mu * np.sum(np.log(rho + gx * gx + gy * gy))

    def grad(x):
        u = point_to_image(x, shape)
        r = blur_apply(k, u) - b
        gx, gy = kx_apply(u), ky_apply(u)
        m = rho + gx * gx + gy * gy
        g = blur_adjoint(k, r) + mu * (kx_adjoint(gx / m) + ky_adjoint(gy / m))
        return image_to_point(g)

    L = None
    if lipschitz:
        na = operator_norm(lambda u: blur_apply(k, u), lambda v: blur_adjoint(k, v), shape)
        nx = operator_norm(kx_apply, kx_adjoint, shape)
        ny = operator_norm(ky_apply, ky_adjoint, shape)
        L = na ** 2 + 2 * mu / rho * (nx ** 2 + ny ** 2)
    return Objective(int(np.prod(shape)), value, grad, None, L, "deblur")
