import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessdamp.analysis import lyapunov_sequence
from hessdamp.core import GammaSchedule, Objective, SolverParams, coefficients_at
from hessdamp.problems import quadratic, random_spd, rosenbrock
from hessdamp.solvers import (
    DivergenceError,
    GeneralCoefficients,
    Scheme,
    SolverState,
    gd_step,
    hbf_step,
    isehd_step,
    isihd_step,
    run,
    validate_general_isehd,
    validate_general_isihd,
)

ROSEN_X0 = (-1.5, 0.0)


def counting(f: Objective):
    calls = [0]

    def grad(x):
        calls[0] += 1
        return f.grad(x)

    return Objective(f.dim, f.value, grad, f.hess, f.lipschitz, f.name), calls


def constant_objective(dim=2, value=3.0):
    return Objective(dim, lambda x: value, lambda x: np.zeros(dim), lambda x: np.zeros((dim, dim)),
                     None, "constant")


# -- independent scalar transcriptions (oracles) ------------------------------------------

def _rosen_grad(x, y):
    r = y - x * x
    return (-2.0 * (1.0 - x) - 400.0 * x * r, 200.0 * r)


def oracle_isehd(n, beta=0.02, gamma=3.0, h=1e-3):
    a = 1.0 / (1.0 + gamma * h)
    bk = beta * h * a
    s = h * h * a
    xp = x = ROSEN_X0
    gp = _rosen_grad(*xp)
    res = [math.hypot(*gp)]
    for _ in range(n):
        g = _rosen_grad(*x)
        y0 = x[0] + a * (x[0] - xp[0]) - bk * (g[0] - gp[0])
        y1 = x[1] + a * (x[1] - xp[1]) - bk * (g[1] - gp[1])
        xp, x, gp = x, (y0 - s * g[0], y1 - s * g[1]), g
        res.append(math.hypot(*_rosen_grad(*x)))
    return res, x


def oracle_isihd(n, beta=0.02, gamma=3.0, h=1e-3):
    a = 1.0 / (1.0 + gamma * h)
    bp = beta / h
    s = h * h * a
    xp = x = ROSEN_X0
    res = [math.hypot(*_rosen_grad(*x))]
    for _ in range(n):
        v = (x[0] - xp[0], x[1] - xp[1])
        g = _rosen_grad(x[0] + bp * v[0], x[1] + bp * v[1])
        xp, x = x, (x[0] + a * v[0] - s * g[0], x[1] + a * v[1] - s * g[1])
        res.append(math.hypot(*_rosen_grad(*x)))
    return res, x


def test_isehd_matches_transcription_on_rosenbrock():
    p = SolverParams.constant(1e-3, 0.02, 3.0, max_iter=100)
    tr = run("isehd", rosenbrock(), p, ROSEN_X0)
    res, x = oracle_isehd(100)
    np.testing.assert_allclose(tr.residuals, res, rtol=1e-12, atol=0)
    np.testing.assert_allclose(tr.x_final, x, rtol=1e-12, atol=0)


def test_isihd_matches_transcription_on_rosenbrock():
    p = SolverParams.constant(1e-3, 0.02, 3.0, max_iter=100)
    tr = run("isihd", rosenbrock(), p, ROSEN_X0)
    res, x = oracle_isihd(100)
    np.testing.assert_allclose(tr.residuals, res, rtol=1e-12, atol=0)
    np.testing.assert_allclose(tr.x_final, x, rtol=1e-12, atol=0)


# -- single steps ------------------------------------------------------------------------

def test_isehd_zero_velocity_start_is_a_gradient_step(half_norm_sq):
    p = SolverParams.constant(0.1, 0.3, 2.0)
    x0 = np.array([1.0, -2.0, 0.5])
    st0 = SolverState.start(half_norm_sq, x0)
    _, _, s = coefficients_at(p, st0.k)
    np.testing.assert_allclose(isehd_step(st0, half_norm_sq, p).x_curr, x0 - s * x0, rtol=1e-15)


@pytest.mark.parametrize("step", [isehd_step, isihd_step, gd_step, hbf_step])
def test_constant_objective_never_moves(step):
    f = constant_objective()
    p = SolverParams.constant(0.5, 0.2, 1.0)
    state = SolverState.start(f, [0.3, -0.4], [0.3, -0.4])
    for _ in range(5):
        state = step(state, f, p)
        np.testing.assert_array_equal(state.x_curr, [0.3, -0.4])


@pytest.mark.parametrize("step,explicit", [(isehd_step, True), (isihd_step, False),
                                           (gd_step, False), (hbf_step, False)])
def test_one_gradient_per_step(step, explicit):
    f, calls = counting(rosenbrock())
    p = SolverParams.constant(1e-3, 0.02, 3.0)
    state = SolverState.start(f, ROSEN_X0, (-1.49, 0.01), explicit=explicit)
    state = SolverState(state.x_prev, state.x_curr, state.g_prev, state.k)  # drop the cache
    before = calls[0]
    step(state, f, p)
    assert calls[0] - before == 1


def test_gd_step_on_scalar_quadratic():
    f = quadratic([[1.0]])
    p = SolverParams.constant(1.0, 0.0, 3.0)
    state = SolverState.start(f, [2.0])
    for _ in range(4):
        x = state.x_curr[0]
        state = gd_step(state, f, p)
        assert state.x_curr[0] == pytest.approx(0.75 * x, rel=1e-15)


def test_gd_equals_explicit_scheme_with_zeroed_momentum(spd_quadratic):
    p = SolverParams.constant(0.05, 0.0, 3.0, max_iter=50)
    _, _, s = coefficients_at(p, 1)
    zeroed = GeneralCoefficients(alpha=lambda k: 0.0, beta=lambda k: 0.0, s=lambda k: s, max_iter=50)
    x0 = np.linspace(-1, 1, 10)
    a = run("gd", spd_quadratic, p, x0)
    b = run("isehd_general", spd_quadratic, zeroed, x0)
    np.testing.assert_array_equal(a.iterates, b.iterates)


def test_hbf_scalar_example():
    f = quadratic([[1.0]])
    p = SolverParams.constant(1.0, 0.0, 1.0, max_iter=1)
    tr = run("hbf", f, p, [1.0], [1.0])
    assert tr.iterates[1, 0] == 0.5


def test_baselines_need_constant_gamma(spd_quadratic):
    p = SolverParams(0.01, 0.0, GammaSchedule.exp_decay(1.0, 2.0))
    for scheme in ("gd", "hbf"):
        with pytest.raises(ValueError):
            run(scheme, spd_quadratic, p, np.ones(10))


def test_isihd_first_step_from_rest_equals_hbf(spd_quadratic):
    p = SolverParams.constant(0.05, 0.3, 2.0)
    x0 = np.arange(10.0)
    a = isihd_step(SolverState.start(spd_quadratic, x0, explicit=False), spd_quadratic, p)
    b = hbf_step(SolverState.start(spd_quadratic, x0, explicit=False), spd_quadratic, p)
    np.testing.assert_array_equal(a.x_curr, b.x_curr)


@given(seed=st.integers(0, 2**20), h=st.floats(1e-3, 0.2), gamma=st.floats(0.1, 5))
def test_beta_zero_collapse_property(seed, h, gamma):
    f = quadratic(random_spd(3, 0.5, 4.0, seed=seed))
    rng = np.random.default_rng(seed)
    x0, x1 = rng.standard_normal(3), rng.standard_normal(3)
    p = SolverParams.constant(h, 0.0, gamma, max_iter=30)
    ref = run("hbf", f, p, x0, x1).iterates
    for scheme in ("isehd", "isihd"):
        np.testing.assert_array_equal(run(scheme, f, p, x0, x1).iterates, ref)


# -- general coefficients -----------------------------------------------------------------

def test_general_explicit_reduces_to_isehd():
    f = rosenbrock()
    p = SolverParams(1e-3, 0.02, GammaSchedule.exp_decay(2.0, 4.0, 0.5), max_iter=300)
    a = run("isehd", f, p, ROSEN_X0)
    b = run("isehd_general", f, GeneralCoefficients.from_params(p, "isehd"), ROSEN_X0)
    np.testing.assert_array_equal(a.iterates, b.iterates)


def test_general_implicit_reduces_to_isihd():
    f = rosenbrock()
    p = SolverParams(1e-3, 0.02, GammaSchedule.exp_decay(2.0, 4.0, 0.5), max_iter=300)
    a = run("isihd", f, p, ROSEN_X0)
    b = run("isihd_general", f, GeneralCoefficients.from_params(p, "isihd"), ROSEN_X0)
    np.testing.assert_array_equal(a.iterates, b.iterates)


def test_general_implicit_zero_beta_is_general_heavy_ball(spd_quadratic):
    c = GeneralCoefficients.constants(0.8, 0.0, 0.05, max_iter=100)
    x0 = np.ones(10)
    a = run("isihd_general", spd_quadratic, c, x0, 0.9 * x0)
    b = run("isehd_general", spd_quadratic, c, x0, 0.9 * x0)
    np.testing.assert_array_equal(a.iterates, b.iterates)


def test_general_explicit_constant_coefficients_decrease(spd_quadratic):
    L = spd_quadratic.lipschitz
    alpha, beta, s = 0.6, 0.01, 0.05
    assert alpha + beta * L + s * L / 2 < 1
    c = GeneralCoefficients.constants(alpha, beta, s, max_iter=2000)
    assert validate_general_isehd(c, L).ok
    tr = run("isehd_general", spd_quadratic, c, np.ones(10), L=L)
    rep = lyapunov_sequence(tr, "isehd_general", spd_quadratic, c, L)
    assert rep.ok and rep.delta > 0


def test_general_implicit_constant_coefficients_decrease(spd_quadratic):
    L = spd_quadratic.lipschitz
    alpha, beta, s = 0.5, 0.2, 0.05
    assert alpha + s * L * (beta + 0.5) < 1
    c = GeneralCoefficients.constants(alpha, beta, s, max_iter=2000)
    assert validate_general_isihd(c, L).ok
    tr = run("isihd_general", spd_quadratic, c, np.ones(10), L=L)
    assert lyapunov_sequence(tr, "isihd_general", spd_quadratic, c, L).ok


def test_general_validator_rejects_large_step(spd_quadratic):
    c = GeneralCoefficients.constants(0.1, 0.0, 0.25, max_iter=10)  # 2/L = 0.2
    v = validate_general_isehd(c, spd_quadratic.lipschitz)
    assert not v.ok and "2/L" in v.message
    assert not validate_general_isihd(c, spd_quadratic.lipschitz).ok


def test_general_scheme_needs_general_coefficients(spd_quadratic):
    with pytest.raises(TypeError):
        run("isehd_general", spd_quadratic, SolverParams.constant(0.1, 0.0, 1.0), np.ones(10))


# -- run ---------------------------------------------------------------------------------

def test_run_zero_iterations_records_initial_state(spd_quadratic):
    tr = run("isehd", spd_quadratic, SolverParams.constant(0.1, 0.1, 3.0, max_iter=0), np.ones(10))
    assert len(tr) == 1 and tr.k.tolist() == [0]
    assert tr[0].step_norm == 0.0


def test_run_stops_on_tolerance(spd_quadratic):
    p = SolverParams.constant(0.1, 0.1, 3.0, max_iter=100, residual_tol=1e9)
    assert run("isihd", spd_quadratic, p, np.ones(10)).iterations == 0


def test_run_tolerance_stop_mid_run(spd_quadratic):
    p = SolverParams.constant(0.1, 0.1, 3.0, max_iter=10_000, residual_tol=1e-8)
    tr = run("isehd", spd_quadratic, p, np.ones(10))
    assert tr.residuals[-1] <= 1e-8 < tr.residuals[-2]
    assert tr.iterations < 10_000


def test_divergence_truncates_and_flags():
    f = quadratic(np.diag([1.0, 1e3]))
    p = SolverParams.constant(1.0, 0.0, 0.1, max_iter=10_000)
    tr = run("gd", f, p, [1.0, 1.0])
    assert tr.diverged
    assert tr.message.startswith("divergence detected at iteration")
    assert tr.iterations < 10_000
    assert np.all(np.isfinite(tr.residuals)) and np.all(np.isfinite(tr.f_values))


def test_divergence_error_message():
    assert str(DivergenceError(7)) == "divergence detected at iteration 7"


@pytest.mark.parametrize("scheme,per_iter", [("isehd", 1), ("gd", 1), ("hbf", 1), ("isihd", 2)])
def test_gradient_count_per_run(spd_quadratic, scheme, per_iter):
    # one evaluation per step; the implicit scheme pays one more to report the
    # residual at x_k, since its own gradient is taken at the extrapolated point
    tr = run(scheme, spd_quadratic, SolverParams.constant(0.1, 0.1, 3.0, max_iter=57), np.ones(10))
    assert tr.grad_evals == per_iter * tr.iterations + 1


def test_run_is_deterministic():
    p = SolverParams.constant(1e-3, 0.02, 3.0, max_iter=500)
    a = run("isehd", rosenbrock(), p, ROSEN_X0)
    b = run("isehd", rosenbrock(), p, ROSEN_X0)
    np.testing.assert_array_equal(a.iterates, b.iterates)
    np.testing.assert_array_equal(a.residuals, b.residuals)


def test_trace_records_and_residuals_nonnegative(spd_quadratic):
    tr = run("isihd", spd_quadratic, SolverParams.constant(0.1, 0.1, 3.0, max_iter=20), np.ones(10))
    recs = list(tr.records())
    assert [r.k for r in recs] == list(range(21))
    assert all(r.residual >= 0 and r.step_norm >= 0 for r in recs)
    assert math.isnan(recs[3].lyapunov)


def test_scheme_parse():
    assert Scheme.parse("ISEHD") is Scheme.ISEHD
    assert Scheme.parse("isihd-general") is Scheme.ISIHD_GENERAL
    with pytest.raises(ValueError):
        Scheme.parse("adam")


@pytest.mark.parametrize("scheme", ["isehd", "isihd"])
def test_square_summability_proxy(spd_quadratic, scheme):
    p = SolverParams.constant(0.1, 0.1, 3.0, max_iter=3000)
    tr = run(scheme, spd_quadratic, p, np.ones(10))
    for seq in (tr.step_norms ** 2, tr.residuals ** 2):
        partial = np.cumsum(seq)
        assert np.all(np.diff(partial) >= 0)
        assert partial[-1] - partial[len(partial) // 2] <= 1e-12 * partial[-1]


@pytest.mark.parametrize("scheme", ["isehd", "isihd"])
def test_rosenbrock_beta004_endpoint_within_1e2(scheme):
    # Expected per the experiment description: x_20000 within 1e-2 of (1, 1).
    # Observed: isehd ends about 6.0e-2 away and isihd about 1.1e-2 away.
    p = SolverParams.constant(1e-3, 0.04, 3.0, max_iter=20_000)
    tr = run(scheme, rosenbrock(), p, ROSEN_X0, keep_iterates=False)
    assert np.linalg.norm(tr.x_final - [1.0, 1.0]) < 1e-2


def test_rosenbrock_beta004_recorded_endpoints():
    # frozen values from running the schemes; guards against silent changes
    p = SolverParams.constant(1e-3, 0.04, 3.0, max_iter=20_000)
    dist = {s: float(np.linalg.norm(run(s, rosenbrock(), p, ROSEN_X0, keep_iterates=False).x_final - 1))
            for s in ("isehd", "isihd", "gd", "hbf")}
    assert dist["isehd"] == pytest.approx(0.0602, abs=5e-4)
    assert dist["isihd"] == pytest.approx(0.0110, abs=5e-4)
    assert dist["hbf"] == pytest.approx(0.0514, abs=5e-4)
    assert dist["gd"] > 1.0


def test_rosenbrock_beta004_whole_run_oscillations():
    # over the last 5000 iterations no scheme changes direction at all, so the
    # fewer-oscillations ordering is only visible over the whole run
    p = SolverParams.constant(1e-3, 0.04, 3.0, max_iter=20_000)

    def sign_changes(v):
        s = np.sign(v)
        s = s[s != 0]
        return int(np.count_nonzero(s[1:] != s[:-1]))

    osc = {s: sign_changes(np.diff(run(s, rosenbrock(), p, ROSEN_X0).iterates[:, 1]))
           for s in ("isehd", "isihd", "hbf")}
    assert osc == {"isehd": 2, "isihd": 2, "hbf": 16}
