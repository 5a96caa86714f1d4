"""Continuous-time inertial systems through their Hessian-free first-order forms.

Explicit damping, ``x'' + gamma x' + beta Hess f(x) x' + grad f(x) = 0``, is
integrated as

    x' = -beta grad f(x) + (1/beta - gamma) x - y/beta
    y' = (1/beta - gamma - beta gamma') x - y/beta

and implicit damping, ``x'' + gamma x' + grad f(x + beta x') = 0``, as

    x' = (y - x)/beta
    y' = -beta grad f(y) - (1/beta - gamma)(x - y)

Neither form evaluates a Hessian. Integration is classical fixed-step RK4.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import GammaSchedule, Objective, as_point

__all__ = [
    "System",
    "PhaseState",
    "ContinuousTrace",
    "isehd_vector_field",
    "isihd_vector_field",
    "initial_phase",
    "velocity",
    "energy",
    "integrate",
]


class System(str, Enum):
    ISEHD = "isehd"
    ISIHD = "isihd"

    @classmethod
    def parse(cls, name) -> "System":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown system {name!r}") from None


@dataclass(frozen=True)
class PhaseState:
    t: float
    x: np.ndarray
    y: np.ndarray


def _check_beta(beta: float):
    if not beta > 0:
        raise ValueError("beta must be positive for the first-order reformulation")


def isehd_vector_field(s: PhaseState, f: Objective, beta: float, gamma: GammaSchedule):
    _check_beta(beta)
    if gamma.derivative is None:
        raise ValueError("explicit-damping system needs the derivative of gamma")
    g, dg = gamma(s.t), gamma.derivative(s.t)
    dx = -beta * np.asarray(f.grad(s.x)) + (1 / beta - g) * s.x - s.y / beta
    dy = (1 / beta - g - beta * dg) * s.x - s.y / beta
    return dx, dy


def isihd_vector_field(s: PhaseState, f: Objective, beta: float, gamma: GammaSchedule):
    _check_beta(beta)
    diff = s.x - s.y
    dx = -diff / beta
    dy = -beta * np.asarray(f.grad(s.y)) - (1 / beta - gamma(s.t)) * diff
    return dx, dy


_FIELDS = {System.ISEHD: isehd_vector_field, System.ISIHD: isihd_vector_field}


def initial_phase(system, x0, v0, f: Objective, beta: float, gamma: GammaSchedule) -> PhaseState:
    """Map initial position and velocity ``(x0, v0)`` to the phase state at ``t = 0``."""
    system = System.parse(system)
    _check_beta(beta)
    x0 = as_point(x0, f.dim)
    v0 = as_point(v0, f.dim)
    if system is System.ISIHD:
        y0 = x0 + beta * v0
    else:
        y0 = -beta * (v0 + beta * np.asarray(f.grad(x0))) + (1 - beta * gamma(0.0)) * x0
    return PhaseState(0.0, x0, y0)


def velocity(system, s: PhaseState, f: Objective, beta: float, gamma: GammaSchedule) -> np.ndarray:
    """Recover ``x'`` from the phase state."""
    system = System.parse(system)
    if system is System.ISIHD:
        return (s.y - s.x) / beta
    return -beta * np.asarray(f.grad(s.x)) + (1 / beta - gamma(s.t)) * s.x - s.y / beta


def energy(system, s: PhaseState, f: Objective, beta: float, gamma: GammaSchedule) -> float:
    """Lyapunov energy of the trajectory at ``s``.

    Explicit: ``f(x) + 1/2 |x' + beta grad f(x)|^2``.
    Implicit: ``f(x + beta x') + 1/2 |x'|^2``.
    """
    system = System.parse(system)
    v = velocity(system, s, f, beta, gamma)
    if system is System.ISIHD:
        return float(f.value(s.x + beta * v) + 0.5 * v @ v)
    w = v + beta * np.asarray(f.grad(s.x))
    return float(f.value(s.x) + 0.5 * w @ w)


@dataclass
class ContinuousTrace:
    system: System
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    diverged: bool = False

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> PhaseState:
        return PhaseState(float(self.t[i]), self.x[i], self.y[i])


def integrate(system, phase0: PhaseState, f: Objective, beta: float, gamma: GammaSchedule,
              dt: float, T: float) -> ContinuousTrace:
    """Integrate from ``phase0`` to ``phase0.t + T`` with fixed RK4 steps of size ``dt``.

    Every step is sampled. When ``T`` is not a multiple of ``dt`` the last
    step is shortened. A non-finite state ends the trace with ``diverged=True``.
    """
    system = System.parse(system)
    _check_beta(beta)
    if not (dt > 0 and T > 0):
        raise ValueError("dt and T must be positive")
    if dt > T:
        raise ValueError(f"dt = {dt} exceeds the horizon T = {T}")
    if system is System.ISEHD and gamma.derivative is None:
        raise ValueError("explicit-damping system needs the derivative of gamma")
    field = _FIELDS[system]

    def rhs(t, x, y):
        return field(PhaseState(t, x, y), f, beta, gamma)

    n_steps = int(np.ceil(T / dt - 1e-9))
    t0 = float(phase0.t)
    x = np.array(phase0.x, dtype=float)
    y = np.array(phase0.y, dtype=float)
    ts, xs, ys = [t0], [x], [y]
    diverged = False
    t = t0
    for i in range(n_steps):
        hstep = min(dt, t0 + T - t) if i == n_steps - 1 else dt
        k1x, k1y = rhs(t, x, y)
        k2x, k2y = rhs(t + hstep / 2, x + hstep / 2 * k1x, y + hstep / 2 * k1y)
        k3x, k3y = rhs(t + hstep / 2, x + hstep / 2 * k2x, y + hstep / 2 * k2y)
        k4x, k4y = rhs(t + hstep, x + hstep * k3x, y + hstep * k3y)
        x = x + hstep / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y = y + hstep / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        t = t0 + (i + 1) * dt if i < n_steps - 1 else t0 + T
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            diverged = True
            break
        ts.append(t)
        xs.append(x)
        ys.append(y)

    t_arr, x_arr, y_arr = np.array(ts), np.array(xs), np.array(ys)
    vs, es = [], []
    for i in range(len(t_arr)):
        s = PhaseState(float(t_arr[i]), x_arr[i], y_arr[i])
        vs.append(velocity(system, s, f, beta, gamma))
        es.append(energy(system, s, f, beta, gamma))
    return ContinuousTrace(system, t_arr, x_arr, y_arr, np.array(vs), np.array(es), diverged)
