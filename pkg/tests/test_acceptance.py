"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (shown in the pytest terminal
summary) and then asserts. Run this file directly to print only the lines.
"""

import time

import numpy as np
import pytest
from scipy.linalg import expm

from hessdamp.analysis import (
    classify_equilibrium_continuous,
    classify_fixed_point_discrete,
    lyapunov_sequence,
    montecarlo_avoidance,
    rate_from_run,
)
from hessdamp.core import (
    GammaSchedule,
    SolverParams,
    coefficients_at,
    validate_convergence_condition,
    validate_saddle_condition,
)
from hessdamp.dynamics import initial_phase, integrate
from hessdamp.problems import (
    DeblurProblem,
    blur_adjoint,
    blur_apply,
    deblur_objective,
    double_well,
    gaussian_kernel,
    image_to_point,
    kx_adjoint,
    kx_apply,
    ky_adjoint,
    ky_apply,
    max_gradient_error,
    phantom,
    quadratic,
    random_spd,
    rosenbrock,
    synthesize_observation,
)
from hessdamp.solvers import run


@pytest.fixture
def check(acceptance_log):
    def _check(cid, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {cid}: {detail}"
        acceptance_log.append(line)
        print(line)
        assert ok, line
    return _check


def spd_problem():
    A = random_spd(10, 1.0, 10.0, seed=0)
    return quadratic(A), float(np.linalg.eigvalsh(A)[-1])


# 1 ---------------------------------------------------------------------------------------

def test_c01_lyapunov_decrease(check):
    f, L = spd_problem()
    p = SolverParams.constant(0.1, 0.1, 3.0, max_iter=10_000)
    assert validate_convergence_condition(p, L).ok
    t0 = time.perf_counter()
    viol = {}
    for scheme in ("isehd", "isihd"):
        tr = run(scheme, f, p, np.ones(10), L=L, keep_iterates=False)
        viol[scheme] = len(lyapunov_sequence(tr, scheme, f, p, L).violations)
    dt = time.perf_counter() - t0
    ok = all(v == 0 for v in viol.values()) and dt < 1.0
    check(1, ok, f"Lyapunov violations {viol} over 1e4 iterations, {dt:.2f} s (limit 1 s)")


# 2 ---------------------------------------------------------------------------------------

def test_c02_beta_zero_collapse(check):
    p = SolverParams.constant(1e-3, 0.0, 3.0, max_iter=1000)
    f_q, _ = spd_problem()
    same = {}
    for name, f, x0 in [("rosenbrock", rosenbrock(), np.array([-1.5, 0.0])),
                        ("quadratic", f_q, np.ones(10))]:
        trs = [run(s, f, p, x0) for s in ("isehd", "isihd", "hbf")]
        same[name] = all(np.array_equal(trs[0].iterates, t.iterates)
                         and np.array_equal(trs[0].f_values, t.f_values)
                         and np.array_equal(trs[0].residuals, t.residuals) for t in trs[1:])
    check(2, all(same.values()), f"bit-identical ISEHD/ISIHD/HBF traces at beta=0: {same}")


# 3 ---------------------------------------------------------------------------------------

def test_c03_gradient_oracles(check):
    rng = np.random.default_rng(0)
    k = gaussian_kernel()
    deblur = deblur_objective(DeblurProblem(k, synthesize_observation(phantom(8), k, 0.01, 0)),
                              lipschitz=False)
    errs = {
        "rosenbrock": max_gradient_error(rosenbrock(), rng.uniform(-2, 2, (20, 2))),
        "double_well": max_gradient_error(double_well(), rng.uniform(-2, 2, (20, 2))),
        "quadratic": max_gradient_error(spd_problem()[0], rng.uniform(-2, 2, (20, 10))),
        "deblur8x8": max_gradient_error(deblur, rng.uniform(0, 1, (20, 64)), step=1e-5),
    }
    ok = all(e < 1e-4 for e in errs.values())
    check(3, ok, "max relative gradient error " +
          ", ".join(f"{k}={v:.1e}" for k, v in errs.items()) + " (limit 1e-4)")


# 4 ---------------------------------------------------------------------------------------

def test_c04_linear_rate(check):
    f, _ = spd_problem()
    p = SolverParams.constant(0.1, 0.1, 3.0)
    est = {s: rate_from_run(s, f, p, np.ones(10), n_iter=1000, model="linear")
           for s in ("isehd", "isihd")}
    ok = all(e.rho < 1 and e.r_squared > 0.99 for e in est.values())
    check(4, ok, ", ".join(f"{s}: rho={e.rho:.4f} r2={e.r_squared:.5f}" for s, e in est.items()))


# 5 ---------------------------------------------------------------------------------------

def test_c05_saddle_instability(check):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    worst = {"isehd": np.inf, "isihd": np.inf, "continuous": np.inf}
    n = 0
    while n < 1000:
        L, c = 10.0 ** rng.uniform(-1, 2), 10.0 ** rng.uniform(-1, 1)
        beta = rng.uniform(0, 1) * c / L
        h = rng.uniform(0, 1) * min(2 * (c / L - beta), 1 / (L * beta))
        p = SolverParams.constant(h, beta, c)
        if not validate_saddle_condition(p, L).ok:
            continue
        eta = -L * rng.uniform(0, 1)
        if eta == 0.0:
            continue
        a, b, s = coefficients_at(p, 0)
        worst["isehd"] = min(worst["isehd"],
                             classify_fixed_point_discrete("isehd", [eta], a, b, s).max_multiplier)
        worst["isihd"] = min(worst["isihd"], classify_fixed_point_discrete(
            "isihd", [eta], a, beta / h, s).max_multiplier)
        worst["continuous"] = min(worst["continuous"],
                                  classify_equilibrium_continuous([eta], c, beta).max_multiplier)
        n += 1
    dt = time.perf_counter() - t0
    ok = worst["isehd"] > 1 and worst["isihd"] > 1 and worst["continuous"] > 0 and dt < 1.0
    check(5, ok, f"over {n} draws min(max|lambda|) - 1: isehd={worst['isehd'] - 1:.2e} "
          f"isihd={worst['isihd'] - 1:.2e}; min(max Re root)={worst['continuous']:.2e}, "
          f"{dt:.2f} s (limit 1 s)")


# 6 ---------------------------------------------------------------------------------------

@pytest.mark.slow
def test_c06_montecarlo_avoidance(check):
    p = SolverParams.constant(0.2, 0.1, 3.0, max_iter=5000)
    box = ([-2.0, -2.0], [2.0, 2.0])
    assert validate_saddle_condition(p, 11.0).ok
    t0 = time.perf_counter()
    counts = {s: montecarlo_avoidance(s, double_well(), p, box, 1000, 0, L=11.0,
                                      classify_tol=1e-6).counts()
              for s in ("isehd", "isihd")}
    dt = time.perf_counter() - t0
    ok = all(c["strict_saddle"] == 0 for c in counts.values()) and dt < 30.0
    check(6, ok, f"endpoint counts {counts}, {dt:.1f} s (limit 30 s)")


# 7 ---------------------------------------------------------------------------------------

def sign_changes(v):
    s = np.sign(v)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


@pytest.fixture(scope="module")
def rosenbrock_runs():
    p = SolverParams.constant(1e-3, 0.04, 3.0, max_iter=20_000)
    x0 = np.array([-1.5, 0.0])
    t0 = time.perf_counter()
    trs = {s: run(s, rosenbrock(), p, x0, x0, keep_iterates=True)
           for s in ("isehd", "isihd", "gd", "hbf")}
    return trs, time.perf_counter() - t0


def test_c07a_rosenbrock_residual(check, rosenbrock_runs):
    trs, dt = rosenbrock_runs
    res = {s: float(t.residuals[-1]) for s, t in trs.items()}
    ok = res["isehd"] * 10 <= res["gd"] and res["isihd"] * 10 <= res["gd"] and dt < 5.0
    check("7a", ok, "final residuals " + ", ".join(f"{s}={r:.2e}" for s, r in res.items()) +
          f", {dt:.2f} s for four runs (limit 5 s)")


def test_c07b_rosenbrock_oscillations(check, rosenbrock_runs):
    trs, dt = rosenbrock_runs
    osc = {s: sign_changes(np.diff(t.iterates[:, 1])[-5000:]) for s, t in trs.items()}
    ok = osc["isehd"] < osc["hbf"] and osc["isihd"] < osc["hbf"] and dt < 5.0
    check("7b", ok, f"sign changes of v_k[y] over the last 5000 iterations {osc}")


# 8 ---------------------------------------------------------------------------------------

@pytest.mark.slow
def test_c08_deblur_ordering(check):
    t0 = time.perf_counter()
    k = gaussian_kernel(5, 1.5)
    b = synthesize_observation(phantom(64), k, 0.01, 0)
    f = deblur_objective(DeblurProblem(k, b, mu=5e-5, rho=1e-3), lipschitz=False)
    p = SolverParams.constant(0.5, 1.3, 0.25, max_iter=250)
    trs = {s: run(s, f, p, image_to_point(b), keep_iterates=False)
           for s in ("isehd", "isihd", "gd")}
    dt = time.perf_counter() - t0
    gd = trs["gd"]
    below = {s: bool(np.all(trs[s].residuals[50:] < gd.residuals[50:])) for s in ("isehd", "isihd")}
    lower_f = {s: bool(trs[s].f_values[-1] < gd.f_values[-1]) for s in ("isehd", "isihd")}
    ok = all(below.values()) and all(lower_f.values()) and dt < 60.0
    check(8, ok, f"residual below GD for k>=50 {below}, final f "
          + ", ".join(f"{s}={t.f_values[-1]:.6g}" for s, t in trs.items()) + f", {dt:.1f} s")


# 9 ---------------------------------------------------------------------------------------

def linear_error(system, dt, beta=0.1, c=1.0, T=1.0):
    f = quadratic([[1.0]])
    g = GammaSchedule.constant(c)
    p0 = initial_phase(system, [1.0], [0.5], f, beta, g)
    if system == "isihd":
        M = np.array([[-1 / beta, 1 / beta], [-(1 / beta - c), -beta + (1 / beta - c)]])
    else:
        M = np.array([[-beta + (1 / beta - c), -1 / beta], [1 / beta - c, -1 / beta]])
    exact = expm(M * T) @ np.array([p0.x[0], p0.y[0]])
    tr = integrate(system, p0, f, beta, g, dt, T)
    return np.hypot(tr.x[-1, 0] - exact[0], tr.y[-1, 0] - exact[1])


def test_c09_ode_energy_decay(check):
    f, _ = spd_problem()
    g = GammaSchedule.constant(1.0)
    dt = 1e-3
    inc, ratio = {}, {}
    for system in ("isehd", "isihd"):
        p0 = initial_phase(system, np.ones(10), np.zeros(10), f, 0.1, g)
        tr = integrate(system, p0, f, 0.1, g, dt, 20.0)
        inc[system] = float(np.max(np.diff(tr.energy)))
        ratio[system] = linear_error(system, 0.05) / linear_error(system, 0.025)
    ok = all(v <= 10 * dt ** 4 for v in inc.values()) and all(12 <= r <= 20 for r in ratio.values())
    check(9, ok, "max energy increment " + ", ".join(f"{s}={v:.2e}" for s, v in inc.items())
          + f" (limit {10 * dt ** 4:.0e}); Richardson ratio "
          + ", ".join(f"{s}={r:.2f}" for s, r in ratio.items()) + " (range [12, 20])")


# 10 --------------------------------------------------------------------------------------

def test_c10_operator_adjoints(check):
    rng = np.random.default_rng(10)
    k = gaussian_kernel()
    pairs = {"A": (lambda u: blur_apply(k, u), lambda v: blur_adjoint(k, v)),
             "Kx": (kx_apply, kx_adjoint), "Ky": (ky_apply, ky_adjoint)}
    worst = {}
    for name, (A, At) in pairs.items():
        gaps = []
        for _ in range(100):
            u, v = rng.standard_normal((16, 16)), rng.standard_normal((16, 16))
            lhs, rhs = np.sum(A(u) * v), np.sum(u * At(v))
            gaps.append(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
        worst[name] = max(gaps)
    ok = all(w < 1e-10 for w in worst.values())
    check(10, ok, "max relative inner-product gap " +
          ", ".join(f"{n}={w:.1e}" for n, w in worst.items()) + " over 100 trials (limit 1e-10)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
