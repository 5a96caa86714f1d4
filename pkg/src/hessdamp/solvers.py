"""Discrete inertial schemes with explicit/implicit Hessian damping and baselines.

All schemes keep two iterates ``x_{k-1}, x_k`` and use one gradient per step:

* ``isehd``: ``y = x_k + a_k v_k - b_k (g(x_k) - g(x_{k-1}))``, ``x_{k+1} = y - s_k g(x_k)``
* ``isihd``: ``y = x_k + a_k v_k``, ``x_{k+1} = y - s_k g(x_k + (beta/h) v_k)``
* ``hbf``:   ``isehd`` with ``beta = 0``
* ``gd``:    ``x_{k+1} = x_k - s g(x_k)``

with ``v_k = x_k - x_{k-1}``, ``a_k = 1/(1 + gamma(kh) h)``, ``b_k = beta h a_k``
and ``s_k = h^2 a_k``. The ``*_general`` variants take free sequences.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Optional, Union

import numpy as np

from .core import Objective, SolverParams, TraceRecord, Verdict, as_point, coefficients_at

__all__ = [
    "Scheme",
    "DivergenceError",
    "SolverState",
    "GeneralCoefficients",
    "Trace",
    "isehd_step",
    "isihd_step",
    "gd_step",
    "hbf_step",
    "isehd_general_step",
    "isihd_general_step",
    "validate_general_isehd",
    "validate_general_isihd",
    "lyapunov_constants",
    "run",
]


class Scheme(str, Enum):
    ISEHD = "isehd"
    ISIHD = "isihd"
    GD = "gd"
    HBF = "hbf"
    ISEHD_GENERAL = "isehd_general"
    ISIHD_GENERAL = "isihd_general"

    @classmethod
    def parse(cls, name) -> "Scheme":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower().replace("-", "_"))
        except ValueError:
            raise ValueError(f"unknown scheme {name!r}") from None


class DivergenceError(FloatingPointError):
    def __init__(self, k: int):
        super().__init__(f"divergence detected at iteration {k}")
        self.k = k


@dataclass(frozen=True)
class SolverState:
    """Two consecutive iterates plus cached gradients.

    ``k`` is the index of ``x_curr`` (the first state has ``k = 1``, holding
    ``x_0`` and ``x_1``). ``g_prev`` caches ``grad(x_prev)`` for the explicit
    scheme; ``g_curr``, when set, caches ``grad(x_curr)`` so a step can reuse
    an evaluation the caller already paid for.
    """

    x_prev: np.ndarray
    x_curr: np.ndarray
    g_prev: Optional[np.ndarray] = None
    k: int = 1
    g_curr: Optional[np.ndarray] = None

    @classmethod
    def start(cls, f: Objective, x0, x1=None, *, explicit: bool = True) -> "SolverState":
        """Build the initial state, evaluating the gradients the schemes need."""
        x0 = as_point(x0, f.dim)
        x1 = x0.copy() if x1 is None else as_point(x1, f.dim)
        g1 = np.asarray(f.grad(x1), dtype=float)
        g0 = None
        if explicit:
            g0 = g1 if np.array_equal(x0, x1) else np.asarray(f.grad(x0), dtype=float)
        return cls(x_prev=x0, x_curr=x1, g_prev=g0, k=1, g_curr=g1)

    @property
    def velocity(self) -> np.ndarray:
        return self.x_curr - self.x_prev


def _fresh_grad(f: Objective, x: np.ndarray, k: int) -> np.ndarray:
    g = np.asarray(f.grad(x), dtype=float)
    if not np.isfinite(g).all():
        raise DivergenceError(k)
    return g


def _current_grad(state: SolverState, f: Objective) -> np.ndarray:
    # a cached gradient was checked when it was evaluated
    if state.g_curr is not None:
        return state.g_curr
    return _fresh_grad(f, state.x_curr, state.k)


def _advance(state: SolverState, x_new: np.ndarray, g_curr: np.ndarray) -> SolverState:
    if not np.isfinite(x_new).all():
        raise DivergenceError(state.k)
    return SolverState(x_prev=state.x_curr, x_curr=x_new, g_prev=g_curr, k=state.k + 1)


def _explicit_update(state, f, alpha, beta_k, s):
    g = _current_grad(state, f)
    g_prev = state.g_prev
    if g_prev is None:
        raise ValueError("explicit scheme needs grad(x_prev) cached in the state")
    y = state.x_curr + alpha * (state.x_curr - state.x_prev) - beta_k * (g - g_prev)
    return _advance(state, y - s * g, g)


def _implicit_update(state, f, alpha, extrap, s):
    v = state.x_curr - state.x_prev
    g = _fresh_grad(f, state.x_curr + extrap * v, state.k)
    y = state.x_curr + alpha * v
    return _advance(state, y - s * g, g)


def _require_constant_gamma(params: SolverParams, name: str):
    if not params.gamma.is_constant:
        raise ValueError(f"{name} requires a constant viscous damping gamma_0")


def isehd_step(state: SolverState, f: Objective, params: SolverParams) -> SolverState:
    """One step of the explicit Hessian-damping scheme."""
    alpha, beta_k, s = coefficients_at(params, state.k)
    return _explicit_update(state, f, alpha, beta_k, s)


def isihd_step(state: SolverState, f: Objective, params: SolverParams) -> SolverState:
    """One step of the implicit scheme; the gradient is taken at ``x_k + (beta/h) v_k``."""
    alpha, _, s = coefficients_at(params, state.k)
    return _implicit_update(state, f, alpha, params.beta / params.h, s)


def hbf_step(state: SolverState, f: Objective, params: SolverParams) -> SolverState:
    _require_constant_gamma(params, "HBF")
    alpha, _, s = coefficients_at(params, state.k)
    g = _current_grad(state, f)
    y = state.x_curr + alpha * (state.x_curr - state.x_prev)
    return _advance(state, y - s * g, g)


def gd_step(state: SolverState, f: Objective, params: SolverParams) -> SolverState:
    _require_constant_gamma(params, "GD")
    _, _, s = coefficients_at(params, state.k)
    g = _current_grad(state, f)
    return _advance(state, state.x_curr - s * g, g)


def _seq(v) -> Callable[[int], float]:
    if callable(v):
        return v
    v = float(v)
    return lambda k: v


@dataclass(frozen=True)
class GeneralCoefficients:
    """Free coefficient sequences ``alpha(k)``, ``beta(k)``, ``s(k)``.

    For the explicit scheme ``beta(k)`` multiplies the gradient difference;
    for the implicit one it is the extrapolation factor.
    """

    alpha: Callable[[int], float]
    beta: Callable[[int], float]
    s: Callable[[int], float]
    max_iter: int = 1000
    residual_tol: float = 0.0
    constant: Optional[tuple] = field(default=None, repr=False)

    @classmethod
    def constants(cls, alpha: float, beta: float, s: float, **kw) -> "GeneralCoefficients":
        if alpha <= 0 or beta < 0 or s <= 0:
            raise ValueError("coefficients must be positive")
        return cls(_seq(alpha), _seq(beta), _seq(s),
                   constant=(float(alpha), float(beta), float(s)), **kw)

    @classmethod
    def from_params(cls, params: SolverParams, scheme="isehd") -> "GeneralCoefficients":
        """Coefficients that make the general scheme coincide with the specific one."""
        scheme = Scheme.parse(scheme)
        if scheme in (Scheme.ISEHD, Scheme.ISEHD_GENERAL):
            beta = lambda k: coefficients_at(params, k)[1]
        elif scheme in (Scheme.ISIHD, Scheme.ISIHD_GENERAL):
            ratio = params.beta / params.h
            beta = lambda k: ratio
        else:
            raise ValueError("from_params supports the isehd and isihd schemes")
        return cls(alpha=lambda k: coefficients_at(params, k)[0], beta=beta,
                   s=lambda k: coefficients_at(params, k)[2],
                   max_iter=params.max_iter, residual_tol=params.residual_tol)

    def table(self, horizon: Optional[int] = None) -> np.ndarray:
        """Rows ``(alpha_k, beta_k, s_k)`` for ``k = 1 .. horizon``."""
        if self.constant is not None:
            return np.array([self.constant])
        n = max(1, self.max_iter if horizon is None else horizon)
        return np.array([(self.alpha(k), self.beta(k), self.s(k)) for k in range(1, n + 1)])


def isehd_general_step(state: SolverState, f: Objective, coeffs: GeneralCoefficients) -> SolverState:
    k = state.k
    return _explicit_update(state, f, coeffs.alpha(k), coeffs.beta(k), coeffs.s(k))


def isihd_general_step(state: SolverState, f: Objective, coeffs: GeneralCoefficients) -> SolverState:
    k = state.k
    return _implicit_update(state, f, coeffs.alpha(k), coeffs.beta(k), coeffs.s(k))


def _general_verdict(tab, L, weights, label) -> Verdict:
    L = float(L)
    a, b, s = tab[:, 0], tab[:, 1], tab[:, 2]
    if np.any(a <= 0) or np.any(b < 0) or np.any(s <= 0):
        return Verdict(False, "coefficient sequences must be positive")
    s_bar = s.max()
    if not s_bar < 2 / L:
        return Verdict(False, f"sup s_k = {s_bar:.6g} >= 2/L = {2 / L:.6g}")
    lhs = weights(a, b, s).max()
    rhs = 1 / s_bar - L / 2
    if lhs < rhs:
        return Verdict(True, f"sup {label} = {lhs:.6g} < 1/s_bar - L/2 = {rhs:.6g}")
    return Verdict(False, f"sup {label} = {lhs:.6g} >= 1/s_bar - L/2 = {rhs:.6g}")


def validate_general_isehd(coeffs: GeneralCoefficients, L: float,
                           horizon: Optional[int] = None) -> Verdict:
    """``sup s_k < 2/L`` and ``sup (alpha_k + beta_k L)/s_k < 1/s_bar - L/2``."""
    return _general_verdict(coeffs.table(horizon), L,
                            lambda a, b, s: (a + b * L) / s, "(alpha_k + beta_k L)/s_k")


def validate_general_isihd(coeffs: GeneralCoefficients, L: float,
                           horizon: Optional[int] = None) -> Verdict:
    """``sup s_k < 2/L`` and ``sup (beta_k L + alpha_k/s_k) < 1/s_bar - L/2``."""
    return _general_verdict(coeffs.table(horizon), L,
                            lambda a, b, s: b * L + a / s, "(beta_k L + alpha_k/s_k)")


def lyapunov_constants(scheme, params, L: float) -> tuple[float, float]:
    """Return ``(weight, delta)`` for ``V_k = f(x_k) + weight/2 |v_k|^2``.

    Along the scheme, ``V_{k+1} <= V_k - delta |v_{k+1}|^2`` whenever
    ``delta > 0``.
    """
    scheme = Scheme.parse(scheme)
    L = float(L)
    if scheme in (Scheme.ISEHD_GENERAL, Scheme.ISIHD_GENERAL):
        tab = params.table()
        a, b, s = tab[:, 0], tab[:, 1], tab[:, 2]
        if scheme is Scheme.ISEHD_GENERAL:
            weight = float(((a + b * L) / s).max())
        else:
            weight = float((b * L + a / s).max())
        return weight, 1 / s.max() - L / 2 - weight
    h, c = params.h, params.gamma.lower
    s_bar = h * h / (1 + c * h)
    if scheme is Scheme.GD:
        return 0.0, 1 / s_bar - L / 2
    beta = 0.0 if scheme is Scheme.HBF else params.beta
    weight = 1 / h ** 2 + beta * L / h
    return weight, 1 / s_bar - L / 2 - weight


@dataclass
class Trace:
    """Per-iteration record of a run. Record ``i`` is the state after ``i`` steps."""

    scheme: Scheme
    k: np.ndarray
    f_values: np.ndarray
    residuals: np.ndarray
    step_norms: np.ndarray
    lyapunov: np.ndarray
    times: np.ndarray
    x_final: np.ndarray
    iterates: Optional[np.ndarray] = None
    diverged: bool = False
    grad_evals: int = 0
    message: str = ""

    def __len__(self) -> int:
        return len(self.k)

    @property
    def iterations(self) -> int:
        return len(self.k) - 1

    def __getitem__(self, i: int) -> TraceRecord:
        x = None if self.iterates is None else self.iterates[i]
        return TraceRecord(int(self.k[i]), x, float(self.f_values[i]), float(self.residuals[i]),
                           float(self.lyapunov[i]), float(self.step_norms[i]))

    def records(self) -> Iterator[TraceRecord]:
        for i in range(len(self)):
            yield self[i]


_STEPS = {
    Scheme.ISEHD: isehd_step,
    Scheme.ISIHD: isihd_step,
    Scheme.GD: gd_step,
    Scheme.HBF: hbf_step,
    Scheme.ISEHD_GENERAL: isehd_general_step,
    Scheme.ISIHD_GENERAL: isihd_general_step,
}

_EXPLICIT = (Scheme.ISEHD, Scheme.ISEHD_GENERAL)


def run(scheme, f: Objective, params: Union[SolverParams, GeneralCoefficients], x0, x1=None,
        *, L: Optional[float] = None, keep_iterates: Optional[bool] = None,
        max_iter: Optional[int] = None) -> Trace:
    """Iterate a scheme from ``(x0, x1)`` and record the trace.

    Stops after ``max_iter`` steps or once the residual ``|grad f(x_k)|`` drops
    to ``residual_tol`` (when that is positive). A non-finite iterate ends the
    run early with ``diverged=True``. When ``L`` is given the Lyapunov column
    holds ``f(x_k) + weight/2 |v_k|^2``; otherwise it is NaN.

    ``keep_iterates`` defaults to True for problems with at most 10^4 unknowns.
    """
    scheme = Scheme.parse(scheme)
    general = scheme in (Scheme.ISEHD_GENERAL, Scheme.ISIHD_GENERAL)
    if general != isinstance(params, GeneralCoefficients):
        raise TypeError(f"scheme {scheme.value} expects "
                        f"{'GeneralCoefficients' if general else 'SolverParams'}")
    if scheme in (Scheme.GD, Scheme.HBF):
        _require_constant_gamma(params, scheme.value.upper())
    step = _STEPS[scheme]
    n_max = params.max_iter if max_iter is None else int(max_iter)
    tol = params.residual_tol
    if keep_iterates is None:
        keep_iterates = f.dim <= 10_000
    weight = lyapunov_constants(scheme, params, L)[0] if L is not None else math.nan

    calls = [0]
    raw_grad = f.grad

    def counted_grad(x):
        calls[0] += 1
        return raw_grad(x)

    fc = Objective(f.dim, f.value, counted_grad, f.hess, f.lipschitz, f.name)
    state = SolverState.start(fc, x0, x1, explicit=scheme in _EXPLICIT)

    ks, fs, rs, ns, vs, ts, xs = [], [], [], [], [], [], []
    t0 = time.perf_counter()

    def measure(st):
        dx = st.x_curr - st.x_prev
        return (float(f.value(st.x_curr)), math.sqrt(float(st.g_curr @ st.g_curr)),
                math.sqrt(float(dx @ dx)))

    def record(i, st, fval, res, step_norm):
        ks.append(i)
        fs.append(fval)
        rs.append(res)
        ns.append(step_norm)
        vs.append(fval + 0.5 * weight * step_norm ** 2)
        ts.append(time.perf_counter() - t0)
        if keep_iterates:
            xs.append(st.x_curr)

    diverged, message = False, ""
    i = 0
    with np.errstate(over="ignore", invalid="ignore"):
        record(0, state, *measure(state))
        while i < n_max and not (tol > 0 and rs[-1] <= tol):
            try:
                new = step(state, fc, params)
                g_new = np.asarray(fc.grad(new.x_curr), dtype=float)
                cand = SolverState(new.x_prev, new.x_curr, new.g_prev, new.k, g_new)
                vals = measure(cand)
                # a non-finite |grad f| means a non-finite gradient; overflow in f
                # or in the norms counts as divergence too
                if not all(map(math.isfinite, vals)):
                    raise DivergenceError(new.k)
            except DivergenceError as exc:
                diverged, message = True, str(exc)
                break
            state = cand
            i += 1
            record(i, state, *vals)

    return Trace(
        scheme=scheme,
        k=np.asarray(ks, dtype=int),
        f_values=np.asarray(fs),
        residuals=np.asarray(rs),
        step_norms=np.asarray(ns),
        lyapunov=np.asarray(vs),
        times=np.asarray(ts),
        x_final=state.x_curr.copy(),
        iterates=np.asarray(xs) if keep_iterates else None,
        diverged=diverged,
        grad_evals=calls[0],
        message=message,
    )
