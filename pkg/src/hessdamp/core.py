"""Shared types and parameter checks for the inertial solvers.

Everything here is immutable once built. Points are 1-D float64 arrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

__all__ = [
    "ConditionError",
    "ConditionWarning",
    "Objective",
    "GammaSchedule",
    "SolverParams",
    "TraceRecord",
    "Verdict",
    "as_point",
    "validate_convergence_condition",
    "validate_saddle_condition",
    "check_params",
    "coefficients_at",
    "estimate_lipschitz",
]


class ConditionError(ValueError):
    """A step-size or damping condition does not hold (strict mode)."""


class ConditionWarning(UserWarning):
    """A step-size or damping condition does not hold (default mode)."""


def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array, optionally of length ``dim``."""
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("point must have dimension >= 1")
    if dim is not None and arr.size != dim:
        raise ValueError(f"point has dimension {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite entries")
    return arr


@dataclass(frozen=True)
class Objective:
    """A smooth objective with gradient and optional Hessian.

    Parameters
    ----------
    dim : int
        Dimension of the search space.
    value : callable
        ``value(x) -> float``.
    grad : callable
        ``grad(x) -> ndarray`` of shape ``(dim,)``.
    hess : callable, optional
        ``hess(x) -> ndarray`` of shape ``(dim, dim)``, symmetric.
    lipschitz : float, optional
        A Lipschitz constant of ``grad``, when one is known.
    name : str
        Label used in reports.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz: Optional[float] = None
    name: str = "objective"

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be a positive integer")
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise ValueError("lipschitz constant must be positive")

    def __call__(self, x) -> float:
        return float(self.value(x))


@dataclass(frozen=True)
class GammaSchedule:
    """Viscous damping ``gamma(t)`` with bounds ``lower <= gamma(t) <= upper``.

    ``derivative`` is only needed by the explicit-damping ODE reformulation.
    Use :meth:`constant` for the common case.
    """

    value: Callable[[float], float]
    lower: float
    upper: float
    derivative: Optional[Callable[[float], float]] = None
    constant_value: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.lower > 0:
            raise ValueError("gamma lower bound c must be positive")
        if self.lower > self.upper:
            raise ValueError("gamma bounds require c <= C")

    @classmethod
    def constant(cls, c: float) -> "GammaSchedule":
        c = float(c)
        return cls(value=lambda t: c, lower=c, upper=c,
                   derivative=lambda t: 0.0, constant_value=c)

    @classmethod
    def exp_decay(cls, lower: float, upper: float, rate: float = 1.0) -> "GammaSchedule":
        """``gamma(t) = c + (C - c) exp(-rate t)``, decreasing from C to c."""
        c, C, r = float(lower), float(upper), float(rate)
        if r < 0:
            raise ValueError("rate must be nonnegative")
        return cls(value=lambda t: c + (C - c) * math.exp(-r * t),
                   derivative=lambda t: -r * (C - c) * math.exp(-r * t),
                   lower=c, upper=C)

    @property
    def is_constant(self) -> bool:
        return self.constant_value is not None

    def __call__(self, t: float) -> float:
        return float(self.value(t))

    def check_bounds(self, ts) -> bool:
        """True when every sampled value lies within ``[lower, upper]``."""
        vals = np.array([self.value(float(t)) for t in np.ravel(ts)])
        return bool(np.all((vals >= self.lower) & (vals <= self.upper)))


@dataclass(frozen=True)
class SolverParams:
    """Step size ``h``, geometric damping ``beta`` and viscous schedule ``gamma``."""

    h: float
    beta: float
    gamma: GammaSchedule
    max_iter: int = 1000
    residual_tol: float = 0.0

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError("step size h must be positive")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be nonnegative")
        if int(self.max_iter) < 0:
            raise ValueError("max_iter must be nonnegative")
        if not self.residual_tol >= 0:
            raise ValueError("residual_tol must be nonnegative")

    @classmethod
    def constant(cls, h: float, beta: float, gamma: float, **kw) -> "SolverParams":
        return cls(h=float(h), beta=float(beta), gamma=GammaSchedule.constant(gamma), **kw)


class TraceRecord(NamedTuple):
    k: int
    x: Optional[np.ndarray]
    f_value: float
    residual: float
    lyapunov: float
    step_norm: float


class Verdict(NamedTuple):
    ok: bool
    message: str

    def __bool__(self) -> bool:
        return self.ok


def _require_L(L) -> float:
    if L is None:
        raise ValueError("Lipschitz constant required")
    L = float(L)
    if not L > 0:
        raise ValueError("Lipschitz constant must be positive")
    return L


def validate_convergence_condition(params: SolverParams, L: float) -> Verdict:
    """Check ``beta + h/2 < c/L``, the condition for the Lyapunov decrease."""
    L = _require_L(L)
    lhs = params.beta + params.h / 2
    rhs = params.gamma.lower / L
    if lhs < rhs:
        return Verdict(True, f"beta + h/2 = {lhs:.6g} < c/L = {rhs:.6g}")
    return Verdict(False, f"beta + h/2 = {lhs:.6g} >= c/L = {rhs:.6g} "
                          f"(violated by {lhs - rhs:.6g})")


def validate_saddle_condition(params: SolverParams, L: float) -> Verdict:
    """Check the step-size conditions under which strict saddles are avoided.

    Needs a constant ``gamma = c``. For ``beta > 0`` the requirements are
    ``beta < c/L``, ``beta != 1/c`` and ``h < min(2(c/L - beta), 1/(L beta))``;
    for ``beta = 0`` (heavy ball) only ``h < 2c/L`` remains.
    """
    L = _require_L(L)
    if not params.gamma.is_constant:
        raise ValueError("constant viscous damping required for saddle guarantee")
    c, beta, h = params.gamma.lower, params.beta, params.h
    if beta == 0:
        bound = 2 * c / L
        if h < bound:
            return Verdict(True, f"beta = 0 and h = {h:.6g} < 2c/L = {bound:.6g}")
        return Verdict(False, f"h = {h:.6g} >= 2c/L = {bound:.6g}")
    if math.isclose(beta * c, 1.0, rel_tol=1e-12):
        return Verdict(False, "beta equals 1/c")
    if not beta < c / L:
        return Verdict(False, f"beta = {beta:.6g} >= c/L = {c / L:.6g}")
    bound = min(2 * (c / L - beta), 1 / (L * beta))
    if h < bound:
        return Verdict(True, f"h = {h:.6g} < {bound:.6g}")
    return Verdict(False, f"h = {h:.6g} >= min(2(c/L - beta), 1/(L beta)) = {bound:.6g}")


def check_params(params: SolverParams, L: float, *, saddle: bool = False,
                 strict: bool = False) -> Verdict:
    """Run a validator and warn (or raise under ``strict``) when it fails."""
    verdict = (validate_saddle_condition if saddle else validate_convergence_condition)(params, L)
    if not verdict.ok:
        if strict:
            raise ConditionError(verdict.message)
        warnings.warn(verdict.message, ConditionWarning, stacklevel=2)
    return verdict


def coefficients_at(params: SolverParams, k: int) -> tuple[float, float, float]:
    """Return ``(alpha_k, beta_k, s_k)`` for iteration ``k``.

    ``alpha_k = 1/(1 + gamma(kh) h)``, ``beta_k = beta h alpha_k`` and
    ``s_k = h^2 alpha_k``.
    """
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    h = params.h
    alpha = 1.0 / (1.0 + params.gamma(k * h) * h)
    return alpha, params.beta * h * alpha, h * h * alpha


def estimate_lipschitz(f: Objective, lo, hi, n_pairs: int = 1000, seed: int = 0) -> float:
    """Sampled lower estimate of the gradient Lipschitz constant on a box.

    Takes the largest ``|grad(x) - grad(y)| / |x - y|`` over random pairs drawn
    uniformly from ``[lo, hi]``. Not a certified bound.
    """
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (f.dim,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (f.dim,))
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_pairs):
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        dx = np.linalg.norm(x - y)
        if dx == 0:
            continue
        best = max(best, np.linalg.norm(f.grad(x) - f.grad(y)) / dx)
    return float(best)
