"""Command-line harness: ``hessdamp {run,plot,montecarlo,gradcheck,ode}``.

Exit codes: 0 success, 1 usage or config error, 2 numerical failure under
``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .analysis import montecarlo_avoidance
from .config import ConfigError
from .core import (
    ConditionError,
    GammaSchedule,
    SolverParams,
    estimate_lipschitz,
    validate_convergence_condition,
    validate_saddle_condition,
)
from .dynamics import System, initial_phase, integrate
from .problems import (
    DeblurProblem,
    deblur_objective,
    double_well,
    gaussian_kernel,
    image_to_point,
    max_gradient_error,
    pgm_read,
    pgm_write,
    phantom,
    point_to_image,
    quadratic,
    random_spd,
    rosenbrock,
    synthesize_observation,
)
from .problems.pgm import PGMError
from .solvers import Scheme, run as run_scheme
from .svgplot import line_plot

TRACE_HEADER = ["k", "f", "residual", "step_norm", "lyapunov"]
MAX_COORDS = 4
MAX_ODE_COORDS = 64
PLOT_KINDS = ("residual_vs_iter", "residual_vs_time", "trajectory_2d")


class NumericalFailure(RuntimeError):
    pass


def _num(v) -> str:
    return repr(float(v))


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_num(v) if not isinstance(v, (int, np.integer)) else str(int(v))
                              for v in row) + "\n")


def _write_kv(path: Path, items) -> None:
    with open(path, "w") as fh:
        for key, val in items:
            fh.write(f"{key} = {val}\n")


# -- problem and parameter construction ----------------------------------------------------

class Problem:
    """Objective plus the default start and any imaging side data."""

    def __init__(self, f, x0, deblur=None, truth=None):
        self.f = f
        self.x0 = x0
        self.deblur = deblur
        self.truth = truth


def build_problem(cfg: dict, *, lipschitz: bool = True) -> Problem:
    name = cfg["problem"]
    seed = int(cfg["seed"])
    if name == "rosenbrock":
        return Problem(rosenbrock(), np.array([-1.5, 0.0]))
    if name == "double_well":
        return Problem(double_well(), np.array([0.5, 0.5]))
    if name == "quadratic":
        d = int(cfg["problem.dim"])
        if d < 1:
            raise ConfigError("problem.dim must be positive")
        try:
            A = random_spd(d, float(cfg["problem.eig_min"]), float(cfg["problem.eig_max"]), seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return Problem(quadratic(A), np.ones(d))
    # deblur
    try:
        if cfg["problem.image"]:
            truth = pgm_read(cfg["problem.image"])
        else:
            truth = phantom(int(cfg["problem.size"]))
        kernel = gaussian_kernel(int(cfg["problem.kernel_size"]), float(cfg["problem.kernel_sigma"]))
        b = synthesize_observation(truth, kernel, float(cfg["problem.noise_sigma"]), seed)
        p = DeblurProblem(kernel, b, float(cfg["problem.mu"]), float(cfg["problem.rho"]))
    except (OSError, PGMError, ValueError) as exc:
        raise ConfigError(f"cannot build deblur problem: {exc}") from None
    return Problem(deblur_objective(p, lipschitz=lipschitz), image_to_point(b), p, truth)


def build_gamma(cfg: dict) -> GammaSchedule:
    kind = cfg["solver.gamma_kind"]
    try:
        if kind == "constant":
            return GammaSchedule.constant(float(cfg["solver.gamma"]))
        if kind == "exp_decay":
            return GammaSchedule.exp_decay(float(cfg["solver.gamma"]), float(cfg["solver.gamma_upper"]),
                                           float(cfg["solver.gamma_rate"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown solver.gamma_kind {kind!r}; expected 'constant' or 'exp_decay'")


def build_params(cfg: dict) -> SolverParams:
    try:
        return SolverParams(h=float(cfg["solver.h"]), beta=float(cfg["solver.beta"]),
                            gamma=build_gamma(cfg), max_iter=int(cfg["solver.max_iter"]),
                            residual_tol=float(cfg["solver.tol"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _point(value, dim: int, key: str):
    if value is None:
        return None
    x = np.asarray(value, dtype=float).ravel()
    if x.size != dim:
        raise ConfigError(f"{key} has {x.size} entries, problem dimension is {dim}")
    return x


def lipschitz_for(cfg: dict, prob: Problem):
    """Configured ``L``, else the objective's own, else a sampled estimate on ``solver.lipschitz_box``."""
    if cfg["solver.L"] is not None:
        return float(cfg["solver.L"]), "configured"
    if prob.f.lipschitz is not None:
        return float(prob.f.lipschitz), "objective"
    box = cfg["solver.lipschitz_box"]
    if box is not None:
        lo, hi = box
        return estimate_lipschitz(prob.f, lo, hi, seed=int(cfg["seed"])), "sampled"
    return None, "unavailable"


def _schemes(cfg: dict) -> list[Scheme]:
    try:
        out = [Scheme.parse(s) for s in cfg["schemes"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for s in out:
        if s in (Scheme.ISEHD_GENERAL, Scheme.ISIHD_GENERAL):
            raise ConfigError(f"scheme {s.value} takes coefficient sequences and is library-only")
    if not out:
        raise ConfigError("schemes must not be empty")
    return out


def _gamma_is_constant_for(scheme: Scheme, params: SolverParams):
    if scheme in (Scheme.GD, Scheme.HBF) and not params.gamma.is_constant:
        raise ConfigError(f"{scheme.value} needs a constant gamma (solver.gamma_kind = 'constant')")


# -- commands ------------------------------------------------------------------------------

def cmd_run(cfg: dict, out: Path, *, strict: bool = False, parallel: bool = False) -> int:
    prob = build_problem(cfg)
    params = build_params(cfg)
    schemes = _schemes(cfg)
    for s in schemes:
        _gamma_is_constant_for(s, params)
    f = prob.f
    x0 = _point(cfg["init.x0"], f.dim, "init.x0")
    x0 = prob.x0 if x0 is None else x0
    x1 = _point(cfg["init.x1"], f.dim, "init.x1")
    L, L_source = lipschitz_for(cfg, prob)

    verdicts = []
    if L is None:
        verdicts.append(("validation.convergence", "not checked (no Lipschitz constant)"))
    else:
        v = validate_convergence_condition(params, L)
        verdicts.append(("validation.convergence", "ok" if v.ok else f"violated: {v.message}"))
        if not v.ok:
            if strict:
                raise NumericalFailure(f"convergence condition violated: {v.message}")
            print(f"warning: convergence condition violated: {v.message}", file=sys.stderr)

    def one(s):
        t0 = time.perf_counter()
        tr = run_scheme(s, f, params, x0, x1, L=L, keep_iterates=f.dim <= MAX_COORDS)
        return tr, time.perf_counter() - t0

    if parallel and len(schemes) > 1:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(one, schemes))
    else:
        results = [one(s) for s in schemes]

    out.mkdir(parents=True, exist_ok=True)
    coords = [f"x{i}" for i in range(f.dim)] if f.dim <= MAX_COORDS else []
    summary = [("problem", cfg["problem"]), ("dimension", f.dim),
               ("lipschitz", "nan" if L is None else _num(L)), ("lipschitz.source", L_source)]
    summary += verdicts
    diverged_any = []
    for s, (tr, wall) in zip(schemes, results):
        rows = []
        for i in range(len(tr)):
            row = [int(tr.k[i]), tr.f_values[i], tr.residuals[i], tr.step_norms[i], tr.lyapunov[i]]
            if coords:
                row.extend(tr.iterates[i])
            rows.append(row)
        _write_rows(out / f"trace_{s.value}.csv", TRACE_HEADER + coords, rows)
        _write_rows(out / f"timing_{s.value}.csv", ["k", "time"],
                    [[int(k), t] for k, t in zip(tr.k, tr.times)])
        key = f"scheme.{s.value}"
        summary += [(f"{key}.iterations", tr.iterations),
                    (f"{key}.final_residual", _num(tr.residuals[-1])),
                    (f"{key}.final_f", _num(tr.f_values[-1])),
                    (f"{key}.grad_evals", tr.grad_evals),
                    (f"{key}.wall_time", f"{wall:.6f}"),
                    (f"{key}.diverged", str(tr.diverged).lower())]
        if tr.diverged:
            summary.append((f"{key}.message", tr.message))
            diverged_any.append(s.value)
        if prob.deblur is not None:
            pgm_write(out / f"restored_{s.value}.pgm", point_to_image(tr.x_final, prob.deblur.shape))
    if prob.deblur is not None:
        pgm_write(out / "observation.pgm", prob.deblur.b)
        pgm_write(out / "truth.pgm", prob.truth)
    _write_kv(out / "summary.txt", summary)
    (out / "config.txt").write_text(cfgmod.dump(cfg))
    for s, (tr, _) in zip(schemes, results):
        print(f"{s.value}: {tr.iterations} iterations, final residual {tr.residuals[-1]:.6e}"
              + (" (diverged)" if tr.diverged else ""))
    if diverged_any and strict:
        raise NumericalFailure(f"divergence in {', '.join(diverged_any)}")
    return 0


def read_trace(path) -> tuple[list[str], np.ndarray]:
    """Read a trace CSV into its header and a float array (one row per record)."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read trace {path}: {exc}") from None
    if not rows:
        raise ConfigError(f"{path}: no header")
    header = rows[0]
    if header[:len(TRACE_HEADER)] != TRACE_HEADER:
        raise ConfigError(f"{path}: header does not start with {','.join(TRACE_HEADER)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: bad number: {exc}") from None
    return header, data.reshape(-1, len(header))


def _label(path: Path) -> str:
    stem = path.stem
    return stem[len("trace_"):] if stem.startswith("trace_") else stem


def cmd_plot(files, kind: str, out: Path, labels=None) -> Path:
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    if not files:
        raise ConfigError("plot needs at least one trace file")
    paths = [Path(p) for p in files]
    labels = list(labels) if labels else [_label(p) for p in paths]
    if len(labels) != len(paths):
        raise ConfigError("number of labels does not match number of traces")
    traces = [read_trace(p) for p in paths]
    header0 = traces[0][0]
    for p, (h, _) in zip(paths, traces):
        if h != header0:
            raise ConfigError(f"mismatched traces: {p} has columns {','.join(h)}, "
                              f"expected {','.join(header0)}")
    for p, (_, d) in zip(paths, traces):
        if len(d) == 0:
            raise ConfigError(f"{p}: no data rows")
    series = []
    if kind == "residual_vs_iter":
        for lab, (h, d) in zip(labels, traces):
            series.append((lab, d[:, 0], d[:, 2]))
        opts = dict(title="Residual vs iteration", xlabel="iteration k",
                    ylabel="residual |grad f(x_k)|", logy=True)
    elif kind == "residual_vs_time":
        for p, lab, (h, d) in zip(paths, labels, traces):
            tpath = p.with_name("timing_" + p.name[len("trace_"):]) if p.name.startswith("trace_") \
                else p.with_name(p.stem + "_timing.csv")
            try:
                with open(tpath, newline="") as fh:
                    trows = list(csv.reader(fh))[1:]
            except OSError:
                raise ConfigError(f"no timing file {tpath} for {p}") from None
            t = np.array([float(r[1]) for r in trows if r])
            if len(t) != len(d):
                raise ConfigError(f"timing file {tpath} does not match {p}")
            series.append((lab, t, d[:, 2]))
        opts = dict(title="Residual vs wall time", xlabel="time [s]",
                    ylabel="residual |grad f(x_k)|", logy=True)
    else:
        coords = header0[len(TRACE_HEADER):]
        if len(coords) != 2:
            raise ConfigError(f"trajectory_2d needs two coordinate columns, traces have {len(coords)}")
        for lab, (h, d) in zip(labels, traces):
            series.append((lab, d[:, 5], d[:, 6]))
        opts = dict(title="Trajectory", xlabel="x0", ylabel="x1", logy=False)
    try:
        svg = line_plot(series, **opts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    target = out if out.suffix == ".svg" else out / f"{kind}.svg"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(svg)
    return target


def cmd_montecarlo(cfg: dict, out: Path, *, strict: bool = False, parallel: bool = False) -> int:
    prob = build_problem(cfg)
    f = prob.f
    if f.hess is None:
        raise ConfigError(f"problem {cfg['problem']} provides no Hessian for classification")
    params = build_params(cfg)
    schemes = _schemes(cfg)
    for s in schemes:
        _gamma_is_constant_for(s, params)
    lo = _point(np.broadcast_to(cfg["montecarlo.box_lo"], (f.dim,)), f.dim, "montecarlo.box_lo")
    hi = _point(np.broadcast_to(cfg["montecarlo.box_hi"], (f.dim,)), f.dim, "montecarlo.box_hi")
    if np.any(hi < lo):
        raise ConfigError("montecarlo.box_lo must not exceed montecarlo.box_hi")
    if cfg["solver.L"] is not None:
        L, L_source = float(cfg["solver.L"]), "configured"
    elif f.lipschitz is not None:
        L, L_source = float(f.lipschitz), "objective"
    else:
        L, L_source = estimate_lipschitz(f, lo, hi, seed=int(cfg["seed"])), "sampled on init box"
    try:
        v = validate_saddle_condition(params, L)
    except ConditionError as exc:
        v = None
        msg = str(exc)
    else:
        msg = v.message
    ok = v is not None and v.ok
    if not ok:
        if strict:
            raise NumericalFailure(f"saddle condition violated: {msg}")
        print(f"warning: saddle condition violated: {msg}", file=sys.stderr)
    n = int(cfg["montecarlo.n_samples"])
    if n < 1:
        raise ConfigError("montecarlo.n_samples must be positive")
    tol = float(cfg["montecarlo.classify_tol"])
    seed = int(cfg["seed"])
    out.mkdir(parents=True, exist_ok=True)
    report = [("problem", cfg["problem"]), ("seed", seed), ("n_samples", n),
              ("classify_tol", _num(tol)), ("lipschitz", _num(L)), ("lipschitz.source", L_source),
              ("validation.saddle", "ok" if ok else f"violated: {msg}")]
    for s in schemes:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = montecarlo_avoidance(s, f, params, (lo, hi), n, seed, tol, parallel=parallel)
        for key, val in rep.counts().items():
            report.append((f"scheme.{s.value}.{key}", val))
        hdr = ["i"] + [f"start{j}" for j in range(f.dim)] + [f"end{j}" for j in range(f.dim)] + ["label"]
        with open(out / f"endpoints_{s.value}.csv", "w") as fh:
            fh.write(",".join(hdr) + "\n")
            for i in range(n):
                vals = [_num(v) for v in np.concatenate([rep.starts[i], rep.endpoints[i]])]
                fh.write(",".join([str(i)] + vals + [rep.labels[i]]) + "\n")
        c = rep.counts()
        print(f"{s.value}: min={c['min']} strict_saddle={c['strict_saddle']} "
              f"nonconverged={c['nonconverged']}")
    _write_kv(out / "montecarlo.txt", report)
    return 0


def cmd_gradcheck(cfg: dict, out=None) -> int:
    prob = build_problem(cfg, lipschitz=False)
    f = prob.f
    n = int(cfg["gradcheck.n_points"])
    if n < 1:
        raise ConfigError("gradcheck.n_points must be positive")
    rng = np.random.default_rng(int(cfg["seed"]))
    if prob.deblur is not None:
        points = [rng.uniform(0.0, 1.0, f.dim) for _ in range(n)]
        step = 1e-5
    else:
        box = float(cfg["gradcheck.box"])
        points = [rng.uniform(-box, box, f.dim) for _ in range(n)]
        step = 1e-6
    if cfg["gradcheck.step"] is not None:
        step = float(cfg["gradcheck.step"])
    if cfg["gradcheck.corrupt"]:
        # negative control: a gradient that is off by one percent
        good = f.grad
        f = replace(f, grad=lambda x: 1.01 * np.asarray(good(x)))
    err = max_gradient_error(f, points, step)
    passed = err < 1e-4
    print(f"max relative gradient error: {err:.3e} over {n} points "
          f"({'pass' if passed else 'FAIL'}, threshold 1e-4)")
    return 0 if passed else 1


def cmd_ode(cfg: dict, out: Path, *, strict: bool = False) -> int:
    prob = build_problem(cfg, lipschitz=False)
    f = prob.f
    beta = float(cfg["solver.beta"])
    if not beta > 0:
        raise ConfigError("ode needs solver.beta > 0")
    gamma = build_gamma(cfg)
    dt, T = float(cfg["ode.dt"]), float(cfg["ode.T"])
    if not (dt > 0 and T > 0):
        raise ConfigError("ode.dt and ode.T must be positive")
    if dt > T:
        raise ConfigError(f"ode.dt = {dt} exceeds ode.T = {T}")
    x0 = _point(cfg["init.x0"], f.dim, "init.x0")
    x0 = prob.x0 if x0 is None else x0
    v0 = _point(cfg["ode.v0"], f.dim, "ode.v0")
    v0 = np.zeros(f.dim) if v0 is None else v0
    try:
        systems = [System.parse(s) for s in cfg["ode.systems"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out.mkdir(parents=True, exist_ok=True)
    coords = [f"x{i}" for i in range(f.dim)] if f.dim <= MAX_ODE_COORDS else []
    summary = [("problem", cfg["problem"]), ("beta", _num(beta)), ("dt", _num(dt)), ("T", _num(T))]
    failed = []
    for sys_ in systems:
        phase0 = initial_phase(sys_, x0, v0, f, beta, gamma)
        tr = integrate(sys_, phase0, f, beta, gamma, dt, T)
        rows = [[tr.t[i], *(tr.x[i] if coords else []), tr.energy[i]] for i in range(len(tr))]
        _write_rows(out / f"ode_{sys_.value}.csv", ["t"] + coords + ["energy"], rows)
        inc = np.diff(tr.energy)
        inc_full = np.concatenate([[0.0], inc])
        _write_rows(out / f"energy_{sys_.value}.csv", ["t", "energy", "increment"],
                    [[t, e, d] for t, e, d in zip(tr.t, tr.energy, inc_full)])
        max_inc = float(inc.max()) if inc.size else 0.0
        max_pos = max(max_inc, 0.0)
        key = f"system.{sys_.value}"
        summary += [(f"{key}.steps", len(tr) - 1),
                    (f"{key}.final_energy", _num(tr.energy[-1])),
                    (f"{key}.max_positive_energy_increment", _num(max_pos)),
                    (f"{key}.diverged", str(tr.diverged).lower())]
        print(f"{sys_.value}: {len(tr) - 1} steps, max positive energy increment {max_pos:.3e}"
              + (" (diverged)" if tr.diverged else ""))
        if tr.diverged:
            failed.append(sys_.value)
    _write_kv(out / "ode_summary.txt", summary)
    if failed and strict:
        raise NumericalFailure(f"integration diverged for {', '.join(failed)}")
    return 0


# -- entry point ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, *, out_default: str = "out"):
    p.add_argument("--config", metavar="PATH", help="TOML config file with flat dotted keys")
    p.add_argument("--preset", metavar="NAME", help="bundled preset (see 'hessdamp presets')")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; repeatable")
    p.add_argument("--seed", type=int, help="seed for problem data and sampling")
    p.add_argument("--out", default=out_default, metavar="DIR", help="output directory")
    p.add_argument("--strict", action="store_true", help="treat condition violations and "
                   "divergence as failures (exit 2)")
    p.add_argument("--parallel", action="store_true", help="run schemes or samples concurrently")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hessdamp", description="Inertial methods with Hessian-driven damping.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [("run", "run solvers and write trace CSVs"),
                        ("montecarlo", "classify endpoints from random starts"),
                        ("gradcheck", "compare analytic and finite-difference gradients"),
                        ("ode", "integrate the continuous-time systems")]:
        _common(sub.add_parser(name, help=help_))
    p = sub.add_parser("plot", help="render trace CSVs as SVG")
    p.add_argument("traces", nargs="*", help="trace CSV files")
    p.add_argument("--kind", default="residual_vs_iter", choices=PLOT_KINDS)
    p.add_argument("--labels", nargs="*", help="legend labels, one per trace")
    p.add_argument("--out", default="plot.svg", metavar="PATH",
                   help="SVG file, or directory for <kind>.svg")
    sub.add_parser("presets", help="list bundled presets")
    return parser


def load_config(args) -> dict:
    sources = []
    if args.preset:
        sources.append(cfgmod.load_preset(args.preset))
    if args.config:
        sources.append(cfgmod.load_file(args.config))
    sources.append(dict(cfgmod.parse_override(o) for o in args.overrides))
    if args.seed is not None:
        sources.append({"seed": args.seed})
    return cfgmod.resolve(sources)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            print("\n".join(cfgmod.preset_names()))
            return 0
        if args.command == "plot":
            target = cmd_plot(args.traces, args.kind, Path(args.out), args.labels)
            print(f"wrote {target}")
            return 0
        cfg = load_config(args)
        out = Path(args.out)
        if args.command == "run":
            return cmd_run(cfg, out, strict=args.strict, parallel=args.parallel)
        if args.command == "montecarlo":
            return cmd_montecarlo(cfg, out, strict=args.strict, parallel=args.parallel)
        if args.command == "gradcheck":
            return cmd_gradcheck(cfg)
        return cmd_ode(cfg, out, strict=args.strict)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
