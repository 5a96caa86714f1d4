"""Closed-form test objectives."""

from __future__ import annotations

import numpy as np

from ..core import Objective


def rosenbrock() -> Objective:
    """``f(x, y) = (1 - x)^2 + 100 (y - x^2)^2``, minimum 0 at ``(1, 1)``.

    The gradient is not globally Lipschitz, so no constant is attached.
    """

    def value(z):
        x, y = z
        return (1 - x) ** 2 + 100 * (y - x * x) ** 2

    def grad(z):
        x, y = z
        r = y - x * x
        return np.array([-2 * (1 - x) - 400 * x * r, 200 * r])

    def hess(z):
        x, y = z
        return np.array([[2 - 400 * (y - x * x) + 800 * x * x, -400 * x],
                         [-400 * x, 200.0]])

    return Objective(2, value, grad, hess, None, "rosenbrock")


def quadratic(A, b=None) -> Objective:
    """``f(x) = 1/2 x^T A x - b^T x`` with ``L = max |eig(A)|``."""
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be a square matrix")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(A).max())):
        raise ValueError("A must be symmetric")
    A = 0.5 * (A + A.T)
    d = A.shape[0]
    b = np.zeros(d) if b is None else np.array(b, dtype=float).reshape(d)
    L = float(np.abs(np.linalg.eigvalsh(A)).max())

    if not b.any():
        # skip the linear term; these run once per iteration in tight loops
        def value(x):
            return 0.5 * float(x @ (A @ x))

        def grad(x):
            return A @ x
    else:
        def value(x):
            return 0.5 * float(x @ (A @ x)) - float(b @ x)

        def grad(x):
            return A @ x - b

    def hess(x):
        return A

    return Objective(d, value, grad, hess, L if L > 0 else None, "quadratic")


def random_spd(dim: int, eig_min: float = 1.0, eig_max: float = 10.0, seed: int = 0) -> np.ndarray:
    """Symmetric positive definite matrix with spectrum spread over ``[eig_min, eig_max]``.

    The extreme eigenvalues are hit exactly so the Lipschitz constant is known.
    """
    if not 0 < eig_min <= eig_max:
        raise ValueError("need 0 < eig_min <= eig_max")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = np.sort(rng.uniform(eig_min, eig_max, dim))
    eigs[0], eigs[-1] = eig_min, eig_max
    A = (q * eigs) @ q.T
    return 0.5 * (A + A.T)


def double_well() -> Objective:
    """``f(x, y) = x^4/4 - x^2/2 + y^2/2``.

    Critical points: a strict saddle at the origin and minima at ``(+-1, 0)``.
    """

    def value(z):
        x, y = z
        return 0.25 * x ** 4 - 0.5 * x * x + 0.5 * y * y

    def grad(z):
        x, y = z
        return np.array([x ** 3 - x, y])

    def hess(z):
        x, _ = z
        return np.array([[3 * x * x - 1, 0.0], [0.0, 1.0]])

    return Objective(2, value, grad, hess, None, "double_well")


DOUBLE_WELL_CRITICAL_POINTS = {
    "saddle": np.array([0.0, 0.0]),
    "min_plus": np.array([1.0, 0.0]),
    "min_minus": np.array([-1.0, 0.0]),
}
