"""Diagnostics: Lyapunov monitoring, rate fits, spectral classification of
fixed points and equilibria, and Monte-Carlo saddle-avoidance runs."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np
from scipy import stats

from .core import Objective, SolverParams, check_params, validate_convergence_condition
from .solvers import (
    GeneralCoefficients,
    Scheme,
    Trace,
    lyapunov_constants,
    run,
    validate_general_isehd,
    validate_general_isihd,
)

__all__ = [
    "LyapunovReport",
    "RateModel",
    "RateEstimate",
    "SpectralClassification",
    "MonteCarloReport",
    "lyapunov_sequence",
    "estimate_rate",
    "rate_from_run",
    "quadratic_roots",
    "classify_fixed_point_discrete",
    "classify_equilibrium_continuous",
    "classify_endpoint",
    "montecarlo_avoidance",
]


# --------------------------------------------------------------------------
# Lyapunov sequences
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovReport:
    values: np.ndarray
    delta: float
    weight: float
    violations: list
    tol: float

    @property
    def ok(self) -> bool:
        return not self.violations


def _lyapunov_precondition(scheme: Scheme, params, L: float):
    if scheme in (Scheme.ISEHD, Scheme.ISIHD):
        verdict = validate_convergence_condition(params, L)
    elif scheme is Scheme.HBF:
        verdict = validate_convergence_condition(replace(params, beta=0.0), L)
    elif scheme is Scheme.ISEHD_GENERAL:
        verdict = validate_general_isehd(params, L)
    elif scheme is Scheme.ISIHD_GENERAL:
        verdict = validate_general_isihd(params, L)
    else:
        delta = lyapunov_constants(scheme, params, L)[1]
        if delta <= 0:
            raise ValueError("step size violates s < 2/L; no descent guarantee")
        return
    if not verdict.ok:
        raise ValueError(f"Lyapunov decrease not guaranteed: {verdict.message}")


def lyapunov_sequence(trace: Trace, scheme=None, f: Optional[Objective] = None,
                      params=None, L: Optional[float] = None,
                      tol: Optional[float] = None) -> LyapunovReport:
    """Evaluate ``V_k = f(x_k) + w/2 |v_k|^2`` along a trace and check its decrease.

    A violation is an index ``k`` with ``V_{k+1} > V_k - delta |v_{k+1}|^2 + tol``;
    ``tol`` defaults to ``1e-10 max(1, |V_0|)``. Raises ``ValueError`` when the
    parameters do not satisfy the decrease condition, since ``delta`` would
    not be positive.

    ``f`` is accepted for symmetry with the solvers; values are read from the trace.
    """
    scheme = Scheme.parse(scheme if scheme is not None else trace.scheme)
    if params is None:
        raise ValueError("solver parameters required")
    if L is None:
        raise ValueError("Lipschitz constant required")
    _lyapunov_precondition(scheme, params, L)
    weight, delta = lyapunov_constants(scheme, params, L)
    n2 = trace.step_norms ** 2
    values = trace.f_values + 0.5 * weight * n2
    if tol is None:
        tol = 1e-10 * max(1.0, abs(values[0])) if len(values) else 0.0
    gaps = values[1:] - (values[:-1] - delta * n2[1:])
    bad = np.nonzero(gaps > tol)[0]
    return LyapunovReport(values, float(delta), float(weight),
                          [(int(k), float(gaps[k])) for k in bad], float(tol))


# --------------------------------------------------------------------------
# Rate estimation
# --------------------------------------------------------------------------

class RateModel(str, Enum):
    LINEAR = "linear"
    POWER = "power"


@dataclass(frozen=True)
class RateEstimate:
    model: RateModel
    slope: float
    intercept: float
    r_squared: float
    window: tuple

    @property
    def rho(self) -> float:
        """Contraction factor of a geometric fit ``d_k ~ rho^k``."""
        if self.model is not RateModel.LINEAR:
            raise AttributeError("rho is defined for the linear model only")
        return math.exp(self.slope)

    @property
    def exponent(self) -> float:
        """Exponent ``p`` of a power-law fit ``d_k ~ k^p``."""
        if self.model is not RateModel.POWER:
            raise AttributeError("exponent is defined for the power model only")
        return self.slope


def estimate_rate(distances, model="linear", *, ks=None, window=None,
                  tail: float = 0.5, min_samples: int = 10) -> RateEstimate:
    """Least-squares fit of ``log d_k`` against ``k`` (linear) or ``log k`` (power).

    By default the fit uses the last ``tail`` fraction of the samples;
    ``window=(start, stop)`` selects an explicit index range instead.
    """
    model = RateModel(str(getattr(model, "value", model)).lower())
    d = np.asarray(distances, dtype=float)
    k = np.arange(d.size, dtype=float) if ks is None else np.asarray(ks, dtype=float)
    if k.shape != d.shape:
        raise ValueError("ks and distances must have the same length")
    if window is None:
        start = int(math.floor(d.size * (1 - tail)))
        window = (start, d.size)
    lo, hi = int(window[0]), int(window[1])
    dw, kw = d[lo:hi], k[lo:hi]
    if dw.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples in the fit window, got {dw.size}")
    if np.any(~np.isfinite(dw)) or np.any(dw <= 0):
        raise ValueError("distances must be positive and finite")
    if model is RateModel.POWER:
        if np.any(kw <= 0):
            raise ValueError("power-law fit needs positive iteration indices")
        xv = np.log(kw)
    else:
        xv = kw
    if np.ptp(xv) == 0:
        raise ValueError("degenerate fit: no variance in the abscissa")
    yv = np.log(dw)
    fit = stats.linregress(xv, yv)
    r2 = 1.0 if np.ptp(yv) == 0 else float(fit.rvalue ** 2)
    return RateEstimate(model, float(fit.slope), float(fit.intercept), r2, (lo, hi))


def rate_from_run(scheme, f: Objective, params, x0, x1=None, *, n_iter: int,
                  model="linear", floor: float = 1e-12, tail: float = 0.5) -> RateEstimate:
    """Fit the rate of ``|x_k - x_inf|`` along a run.

    ``x_inf`` is the endpoint of a reference run four times longer. Samples are
    cut at the first distance below ``floor * max(1, |x_inf|)``, where
    round-off takes over.
    """
    ref = run(scheme, f, params, x0, x1, max_iter=4 * n_iter, keep_iterates=False)
    tr = run(scheme, f, params, x0, x1, max_iter=n_iter, keep_iterates=True)
    x_inf = ref.x_final
    d = np.linalg.norm(tr.iterates - x_inf, axis=1)
    cut = floor * max(1.0, float(np.linalg.norm(x_inf)))
    below = np.nonzero(d <= cut)[0]
    n = int(below[0]) if below.size else d.size
    return estimate_rate(d[:n], model, tail=tail)


# --------------------------------------------------------------------------
# Spectral classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralClassification:
    """Roots of the per-eigenvalue characteristic quadratics.

    ``multipliers`` holds ``|lambda|`` for discrete maps and ``Re lambda`` for
    continuous flows.
    """

    roots: np.ndarray
    multipliers: np.ndarray
    is_unstable: bool
    is_hyperbolic: bool
    kind: str

    @property
    def max_multiplier(self) -> float:
        return float(np.max(self.multipliers))


def quadratic_roots(b, c):
    """Roots of ``lambda^2 + b lambda + c = 0``, elementwise, without cancellation."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    disc = b * b - 4 * c
    real = disc >= 0
    sq = np.sqrt(np.where(real, disc, 0.0))
    sgn = np.where(b >= 0, 1.0, -1.0)
    q = -0.5 * (b + sgn * sq)
    safe_q = np.where(q == 0, 1.0, q)
    r1 = np.where(real, q, -0.5 * b)
    r2 = np.where(real, np.where(q == 0, 0.0, c / safe_q), -0.5 * b)
    im = 0.5 * np.sqrt(np.where(real, 0.0, -disc))
    return r1 + 1j * im, r2 - 1j * im


def classify_fixed_point_discrete(scheme, hessian_eigs, alpha: float, beta_coef: float,
                                  s: float, tol: float = 1e-9) -> SpectralClassification:
    """Multipliers of the two-step map at a fixed point ``(x, x)``.

    For each Hessian eigenvalue ``eta`` the explicit scheme gives
    ``l^2 + (eta (b + s) - (1 + a)) l + a - eta b = 0`` with ``b = beta h a``,
    and the implicit scheme ``l^2 - ((1 + a) - s (1 + b') eta) l + a - s b' eta = 0``
    with ``b' = beta / h``. Pass ``b`` or ``b'`` as ``beta_coef``.
    """
    scheme = Scheme.parse(scheme)
    eta = np.atleast_1d(np.asarray(hessian_eigs, dtype=float))
    a, bc, s = float(alpha), float(beta_coef), float(s)
    if scheme in (Scheme.ISEHD, Scheme.HBF, Scheme.ISEHD_GENERAL):
        if bc > 0 and math.isclose(a, bc / (bc + s), rel_tol=1e-12):
            raise ValueError("degenerate multiplier: excluded by hypothesis beta != 1/c")
        lin = eta * (bc + s) - (1 + a)
        const = a - eta * bc
    elif scheme in (Scheme.ISIHD, Scheme.ISIHD_GENERAL):
        if bc > 0 and math.isclose(a, bc / (bc + 1), rel_tol=1e-12):
            raise ValueError("degenerate multiplier: excluded by hypothesis beta != 1/c")
        lin = -((1 + a) - s * (1 + bc) * eta)
        const = a - s * bc * eta
    else:
        raise ValueError(f"no characteristic quadratic for scheme {scheme.value}")
    r1, r2 = quadratic_roots(lin, const)
    roots = np.concatenate([r1, r2])
    mags = np.abs(roots)
    return SpectralClassification(roots, mags, bool(mags.max() > 1),
                                  bool(np.all(np.abs(mags - 1) > tol)), "discrete")


def classify_equilibrium_continuous(hessian_eigs, c: float, beta: float,
                                    tol: float = 1e-9) -> SpectralClassification:
    """Eigenvalues of the linearized flow: roots of ``l^2 + (c + eta beta) l + eta = 0``."""
    if not (c > 0 and beta > 0):
        raise ValueError("c and beta must be positive")
    if math.isclose(beta * c, 1.0, rel_tol=1e-12):
        raise ValueError("excluded by hypothesis beta != 1/c")
    eta = np.atleast_1d(np.asarray(hessian_eigs, dtype=float))
    r1, r2 = quadratic_roots(c + eta * beta, eta)
    roots = np.concatenate([r1, r2])
    re = roots.real
    return SpectralClassification(roots, re, bool(re.max() > 0),
                                  bool(np.all(np.abs(re) > tol)), "continuous")


# --------------------------------------------------------------------------
# Monte-Carlo saddle avoidance
# --------------------------------------------------------------------------

@dataclass
class MonteCarloReport:
    scheme: Scheme
    seed: int
    n_samples: int
    n_to_min: int
    n_to_strict_saddle: int
    n_nonconverged: int
    starts: np.ndarray
    endpoints: np.ndarray
    labels: list

    def counts(self) -> dict:
        return {"min": self.n_to_min, "strict_saddle": self.n_to_strict_saddle,
                "nonconverged": self.n_nonconverged}


def sample_start(seed: int, index: int, lo, hi) -> np.ndarray:
    """Uniform draw in ``[lo, hi]`` from a Philox stream keyed by ``(seed, index)``."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lo + (hi - lo) * rng.random(lo.shape)


def classify_endpoint(f: Objective, x: np.ndarray, residual: float, classify_tol: float,
                      eig_tol: float = 1e-9) -> str:
    """``"min"``, ``"strict_saddle"`` or ``"nonconverged"`` from residual and Hessian sign."""
    if not (np.isfinite(residual) and residual <= classify_tol):
        return "nonconverged"
    lam = np.linalg.eigvalsh(np.asarray(f.hess(x), dtype=float))
    if lam[0] < -eig_tol:
        return "strict_saddle"
    if lam[0] > eig_tol:
        return "min"
    return "nonconverged"


def montecarlo_avoidance(scheme, f: Objective, params: SolverParams, init_box, n_samples: int,
                         seed: int, classify_tol: float = 1e-6, *, L: Optional[float] = None,
                         strict: bool = False, parallel: bool = False) -> MonteCarloReport:
    """Run ``n_samples`` starts ``x0 = x1`` drawn from ``init_box = (lo, hi)`` and
    classify where each run ends.

    Runs stop once the residual reaches ``classify_tol`` or after
    ``params.max_iter`` steps. When ``L`` is given the saddle-avoidance step-size
    condition is checked first (warning, or ``ConditionError`` under ``strict``).
    """
    scheme = Scheme.parse(scheme)
    if f.hess is None:
        raise ValueError("Monte-Carlo classification needs the Hessian")
    if L is not None:
        check_params(params, L, saddle=True, strict=strict)
    lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (f.dim,)) for b in init_box)
    if np.any(hi < lo):
        raise ValueError("init box needs lo <= hi")
    run_params = replace(params, residual_tol=classify_tol)

    def one(i):
        x0 = sample_start(seed, i, lo, hi)
        tr = run(scheme, f, run_params, x0, keep_iterates=False)
        res = math.inf if tr.diverged else float(tr.residuals[-1])
        return x0, tr.x_final, classify_endpoint(f, tr.x_final, res, classify_tol)

    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(one, range(n_samples)))
    else:
        results = [one(i) for i in range(n_samples)]
    labels = [r[2] for r in results]
    return MonteCarloReport(
        scheme=scheme, seed=int(seed), n_samples=int(n_samples),
        n_to_min=labels.count("min"),
        n_to_strict_saddle=labels.count("strict_saddle"),
        n_nonconverged=labels.count("nonconverged"),
        starts=np.array([r[0] for r in results]).reshape(n_samples, f.dim),
        endpoints=np.array([r[1] for r in results]).reshape(n_samples, f.dim),
        labels=labels,
    )
