"""Run configuration: INI files with ``[model]``, ``[solver]``, ``[sweep]``, ``[search]`` and ``[output]``.

Example::

    [model]
    name = tcr
    p = 0.06

    [solver]
    rtol = 1e-10
    samples = 512

    [sweep]
    alpha = linspace(0.1, 2.0, 11)
    beta = linspace(0.1, 2.0, 11)

    [search]
    free = c0
    initial = 1.7
    budget = 200

    [output]
    prefix = tcr

Sweep axes run in file order, the last one varying fastest. A grid is
``linspace(a, b, n)``, ``logspace(a, b, n)`` (decades) or a comma list.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .models import get_model
from .pipeline import SolverConfig

__all__ = ["ConfigError", "RunConfig", "SearchConfig", "OutputConfig", "load_config",
           "parse_config", "parse_grid"]

COMMANDS = ("pss", "floquet", "measures", "sweep", "search")
_TOPOLOGY = {"both": 0, "parallel": 1, "series": 2}

_SOLVER_KEYS = {
    "rtol": ("rtol", float),
    "atol": ("atol", float),
    "horizon": ("horizon", float),
    "settle_tol": ("settle_tol", float),
    "shoot_tol": ("shoot_tol", float),
    "samples": ("n_samples", int),
    "timeout": ("timeout", float),
    "db_floor": ("db_floor", float),
    "backend": ("backend", str),
}


class ConfigError(ValueError):
    """The configuration cannot be parsed or names something that does not exist."""


@dataclass(frozen=True)
class SearchConfig:
    free: tuple[str, ...] = ()
    initial: tuple[float, ...] = ()
    budget: int = 200
    xtol: float = 1e-4
    initial_step: float = 0.05
    lambda_tol: float = 1e-6
    upsilon_tol: float = 1e-2


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "."
    prefix: str = ""
    csv: bool = True
    svg: bool = True
    orbit_dims: tuple[int, ...] = (0, 1)


@dataclass(frozen=True)
class RunConfig:
    model: str
    params: dict[str, float]
    solver: SolverConfig = field(default_factory=SolverConfig)
    grids: dict[str, tuple[float, ...]] = field(default_factory=dict)
    search: SearchConfig = field(default_factory=SearchConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def echo(self) -> str:
        """The fully resolved configuration in the same INI grammar."""
        out = ["[model]", f"name = {self.model}"]
        out += [f"{k} = {_fmt(v)}" for k, v in self.params.items()]
        out += ["", "[solver]"]
        for key, (attr, _) in _SOLVER_KEYS.items():
            v = getattr(self.solver, attr)
            if v is not None:
                out.append(f"{key} = {_fmt(v)}")
        if self.grids:
            out += ["", "[sweep]"]
            out += [f"{k} = {', '.join(_fmt(x) for x in v)}" for k, v in self.grids.items()]
        if self.search.free:
            s = self.search
            out += ["", "[search]", f"free = {', '.join(s.free)}",
                    f"initial = {', '.join(_fmt(x) for x in s.initial)}",
                    f"budget = {s.budget}", f"xtol = {_fmt(s.xtol)}",
                    f"initial_step = {_fmt(s.initial_step)}",
                    f"lambda_tol = {_fmt(s.lambda_tol)}", f"upsilon_tol = {_fmt(s.upsilon_tol)}"]
        o = self.output
        out += ["", "[output]", f"prefix = {o.prefix}", f"csv = {str(o.csv).lower()}",
                f"svg = {str(o.svg).lower()}",
                f"orbit_dims = {', '.join(str(d) for d in o.orbit_dims)}"]
        return "\n".join(out)


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {text!r}") from None


_FUNC = re.compile(r"^\s*(linspace|logspace)\s*\(([^)]*)\)\s*$")


def parse_grid(text: str, where: str = "grid") -> tuple[float, ...]:
    """Parse ``linspace(a, b, n)``, ``logspace(a, b, n)`` or ``v1, v2, ...``."""
    m = _FUNC.match(text)
    if m:
        args = [a.strip() for a in m.group(2).split(",")]
        if len(args) != 3:
            raise ConfigError(f"{where}: {m.group(1)} takes three arguments")
        a, b = _float(args[0], where), _float(args[1], where)
        try:
            n = int(args[2])
        except ValueError:
            raise ConfigError(f"{where}: point count must be an integer") from None
        if n < 1:
            raise ConfigError(f"{where}: point count must be positive")
        fn = np.linspace if m.group(1) == "linspace" else np.logspace
        return tuple(float(v) for v in fn(a, b, n))
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{where}: empty grid")
    return tuple(_float(s, where) for s in items)


def _bool(text: str, where: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {text!r}")


def _apply_sets(cp: configparser.ConfigParser, sets: Sequence[str]) -> None:
    for item in sets:
        key, eq, value = item.partition("=")
        if not eq or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key = key.strip()
        section, dot, name = key.partition(".")
        if not dot:
            section, name = "model", key
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value.strip())


def _param_value(model: str, key: str, text: str) -> float:
    if model == "fet" and key == "topology":
        t = text.strip().lower()
        if t in _TOPOLOGY:
            return _TOPOLOGY[t]
    return _float(text, f"[model] {key}")


def parse_config(text: str, *, preset: str | None = None,
                 sets: Sequence[str] = ()) -> RunConfig:
    """Parse configuration text, then apply ``preset`` and ``--set`` overrides."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    unknown = set(cp.sections()) - {"model", "solver", "sweep", "search", "output"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    _apply_sets(cp, sets)
    if preset:
        if not cp.has_section("model"):
            cp.add_section("model")
        cp.set("model", "name", preset)

    if not cp.has_option("model", "name"):
        raise ConfigError("no model given: set [model] name or use --preset")
    model = cp.get("model", "name").strip()
    try:
        spec = get_model(model)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    overrides = {k: _param_value(model, k, v) for k, v in cp.items("model") if k != "name"}

    grids: dict[str, tuple[float, ...]] = {}
    if cp.has_section("sweep"):
        for k, v in cp.items("sweep"):
            grids[k] = parse_grid(v, f"[sweep] {k}")
    try:
        probe = {**overrides, **{k: g[0] for k, g in grids.items()}}
        params = spec.resolve(probe)
        spec.field(params)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from None
    params = spec.resolve(overrides)

    skw = {}
    if cp.has_section("solver"):
        for k, v in cp.items("solver"):
            if k not in _SOLVER_KEYS:
                raise ConfigError(f"[solver] unknown key {k!r}")
            attr, conv = _SOLVER_KEYS[k]
            if conv is str:
                skw[attr] = v.strip()
            else:
                try:
                    skw[attr] = conv(v)
                except ValueError:
                    raise ConfigError(f"[solver] {k}: bad value {v!r}") from None
    try:
        solver = SolverConfig(**skw)
    except ValueError as exc:
        raise ConfigError(f"[solver] {exc}") from None
    if solver.backend not in (None, "compiled", "python"):
        raise ConfigError(f"[solver] backend must be compiled or python, got {solver.backend!r}")

    search = SearchConfig()
    if cp.has_section("search"):
        sec = dict(cp.items("search"))
        known = {f.name for f in fields(SearchConfig)}
        bad = set(sec) - known
        if bad:
            raise ConfigError(f"[search] unknown key(s): {', '.join(sorted(bad))}")
        free = tuple(s.strip() for s in sec.get("free", "").split(",") if s.strip())
        initial = (parse_grid(sec["initial"], "[search] initial") if "initial" in sec
                   else tuple(float(params[k]) for k in free if k in params))
        for k in free:
            if k not in params:
                raise ConfigError(f"[search] model {model!r} has no parameter {k!r}")
        if len(initial) != len(free):
            raise ConfigError("[search] initial needs one value per free parameter")
        try:
            search = SearchConfig(
                free=free,
                initial=initial,
                budget=int(sec.get("budget", 200)),
                xtol=float(sec.get("xtol", 1e-4)),
                initial_step=float(sec.get("initial_step", 0.05)),
                lambda_tol=float(sec.get("lambda_tol", 1e-6)),
                upsilon_tol=float(sec.get("upsilon_tol", 1e-2)),
            )
        except ValueError as exc:
            raise ConfigError(f"[search] {exc}") from None

    output = OutputConfig()
    if cp.has_section("output"):
        sec = dict(cp.items("output"))
        bad = set(sec) - {"dir", "prefix", "csv", "svg", "orbit_dims"}
        if bad:
            raise ConfigError(f"[output] unknown key(s): {', '.join(sorted(bad))}")
        try:
            dims = tuple(int(s) for s in sec.get("orbit_dims", "0, 1").split(","))
        except ValueError:
            raise ConfigError("[output] orbit_dims must be integers") from None
        if len(dims) not in (2, 3) or min(dims) < 0 or max(dims) >= spec.field(params).dim:
            raise ConfigError("[output] orbit_dims must name two or three state coordinates")
        output = OutputConfig(
            dir=sec.get("dir", "."),
            prefix=sec.get("prefix", ""),
            csv=_bool(sec.get("csv", "true"), "[output] csv"),
            svg=_bool(sec.get("svg", "true"), "[output] svg"),
            orbit_dims=dims,
        )
    if not (math.isfinite(solver.db_floor)):
        raise ConfigError("[solver] db_floor must be finite")
    return RunConfig(model, params, solver, grids, search, output)


def load_config(path: str, *, preset: str | None = None, sets: Sequence[str] = ()) -> RunConfig:
    """Read and parse a configuration file.

    Raises
    ------
    ConfigError
        On syntax errors and unknown models, parameters or keys.
    OSError
        If the file cannot be read.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, preset=preset, sets=sets)
