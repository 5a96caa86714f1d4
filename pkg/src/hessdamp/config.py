"""Experiment configuration: flat dotted keys read from TOML, with presets and overrides."""

from __future__ import annotations

import ast
from importlib import resources
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    pass


PROBLEMS = ("rosenbrock", "quadratic", "double_well", "deblur")

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "schemes": ["isehd", "isihd", "gd", "hbf"],
    "problem.dim": 10,
    "problem.eig_min": 1.0,
    "problem.eig_max": 10.0,
    "problem.size": 64,
    "problem.mu": 5e-5,
    "problem.rho": 1e-3,
    "problem.kernel_size": 5,
    "problem.kernel_sigma": 1.5,
    "problem.noise_sigma": 0.01,
    "problem.image": "",
    "solver.h": 1e-3,
    "solver.beta": 0.02,
    "solver.gamma": 3.0,
    "solver.gamma_kind": "constant",
    "solver.gamma_upper": 3.0,
    "solver.gamma_rate": 1.0,
    "solver.max_iter": 1000,
    "solver.tol": 0.0,
    "solver.L": None,
    "solver.lipschitz_box": None,
    "init.x0": None,
    "init.x1": None,
    "montecarlo.n_samples": 1000,
    "montecarlo.box_lo": [-2.0, -2.0],
    "montecarlo.box_hi": [2.0, 2.0],
    "montecarlo.classify_tol": 1e-6,
    "ode.systems": ["isehd", "isihd"],
    "ode.dt": 1e-3,
    "ode.T": 10.0,
    "ode.v0": None,
    "gradcheck.n_points": 20,
    "gradcheck.box": 2.0,
    "gradcheck.step": None,
    "gradcheck.corrupt": False,
}


def flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for key, val in tree.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(flatten(val, name + "."))
        else:
            flat[name] = val
    return flat


def parse_text(text: str) -> dict:
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    flat = flatten(tree)
    # "problem" is both a name and a table: accept problem.name as the name
    if "problem.name" in flat:
        flat["problem"] = flat.pop("problem.name")
    return flat


def load_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_text(text)


def preset_names() -> list[str]:
    root = resources.files("hessdamp") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def load_preset(name: str) -> dict:
    res = resources.files("hessdamp") / "presets" / f"{name}.toml"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_text(res.read_text())


def parse_override(item: str) -> tuple[str, Any]:
    """``key=value`` with the value read as a Python/TOML literal when possible."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    raw = raw.strip()
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return key.strip(), lowered == "true"
    try:
        return key.strip(), ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return key.strip(), raw


def resolve(sources: list[dict]) -> dict:
    """Merge defaults and sources left to right and check the keys."""
    cfg = dict(DEFAULTS)
    for src in sources:
        for key in src:
            if key != "problem" and key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
        cfg.update(src)
    if "problem" not in cfg:
        raise ConfigError("config must set 'problem'")
    if cfg["problem"] not in PROBLEMS:
        raise ConfigError(f"unknown problem {cfg['problem']!r}; expected one of {PROBLEMS}")
    if isinstance(cfg["schemes"], str):
        cfg["schemes"] = [cfg["schemes"]]
    if isinstance(cfg["ode.systems"], str):
        cfg["ode.systems"] = [cfg["ode.systems"]]
    return cfg


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(e) for e in v) + "]"
    return repr(v)


def dump(cfg: dict) -> str:
    """Resolved config as TOML with quoted dotted keys, sorted for stable output.

    Keys whose value is ``None`` (meaning "use the default rule") are written
    as comments, so the text loads back to the same config.
    """
    lines = []
    for k in sorted(cfg):
        if cfg[k] is None:
            lines.append(f"# {k} unset\n")
        else:
            lines.append(f'"{k}" = {_toml_value(cfg[k])}\n')
    return "".join(lines)
