"""Parameter sweeps, measure correlation and the symmetry-seeking search."""
from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from . import floquet
from .measures import DB_FLOOR, MeasureError, to_db
from .models import ModelSpec, get_model
from .ode import DomainError, IntegrationError
from .optimize import nelder_mead
from .pipeline import SolverConfig, analyze
from .pss import (
    ConditioningError,
    ConvergenceError,
    NoOscillationError,
    SolverTimeout,
)

__all__ = [
    "Correlation",
    "SearchError",
    "SearchResult",
    "StatisticsError",
    "SweepRow",
    "SweepTable",
    "correlate",
    "evaluate_point",
    "find_symmetry",
    "iter_sweep",
    "sweep",
]

STATUS_OK = "ok"


class StatisticsError(ValueError):
    """Too few usable rows for a correlation estimate."""


class SearchError(RuntimeError):
    """Every evaluation of the search failed."""


@dataclass(frozen=True)
class SweepRow:
    """One grid point; measure fields are ``None`` when ``status != "ok"``."""

    values: tuple[float, ...]
    lambda_: float | None
    upsilon: float | None
    lambda_db: float | None
    upsilon_db: float | None
    status: str = STATUS_OK

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


@dataclass
class SweepTable:
    """Rows in C order over ``grids`` (last name varies fastest)."""

    model: str
    names: tuple[str, ...]
    grids: tuple[tuple[float, ...], ...]
    rows: list[SweepRow] = field(default_factory=list)
    fixed: dict[str, float] = field(default_factory=dict)
    truncated: bool = False

    @property
    def columns(self) -> list[str]:
        return [*self.names, "lambda", "upsilon", "lambda_db", "upsilon_db", "status"]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.grids)

    @property
    def n_ok(self) -> int:
        return sum(r.ok for r in self.rows)

    def success_rate(self) -> float:
        return self.n_ok / len(self.rows) if self.rows else 0.0

    def column(self, name: str) -> np.ndarray:
        """A column as floats, NaN where the row failed."""
        if name in self.names:
            i = self.names.index(name)
            return np.array([r.values[i] for r in self.rows])
        attr = {"lambda": "lambda_", "upsilon": "upsilon", "lambda_db": "lambda_db",
                "upsilon_db": "upsilon_db"}[name]
        return np.array([np.nan if getattr(r, attr) is None else getattr(r, attr)
                         for r in self.rows])

    def grid_array(self, name: str) -> np.ndarray:
        """A measure column reshaped to the grid (requires a complete table)."""
        return self.column(name).reshape(self.shape)


def _status_of(exc: BaseException) -> str:
    for kind, status in (
        (SolverTimeout, "timeout"),
        (NoOscillationError, "no_oscillation"),
        (ConvergenceError, "no_convergence"),
        (ConditioningError, "ill_conditioned"),
        (floquet.DegenerateSpectrumError, "degenerate"),
        (floquet.NonOscillatoryError, "non_oscillatory"),
        (IntegrationError, "integration"),
        (DomainError, "domain"),
        (MeasureError, "degenerate_measure"),
        (ValueError, "invalid"),
    ):
        if isinstance(exc, kind):
            return status
    return "error"


def evaluate_point(
    spec: ModelSpec,
    params: Mapping[str, float],
    config: SolverConfig,
    warm: tuple[np.ndarray, float] | None = None,
):
    """Run the pipeline at one parameter point.

    Returns ``(row_measures, status, warm_state)`` where ``warm_state`` is
    ``(anchor, period)`` on success. A failed warm start is retried cold.
    """
    deadline = time.monotonic() + config.timeout if config.timeout else None
    try:
        fld = spec.field(dict(params))
    except (ValueError, KeyError) as exc:
        return None, _status_of(exc) if isinstance(exc, ValueError) else "invalid", None
    attempts = []
    if warm is not None:
        attempts.append((warm[0], warm[1]))
    attempts.append((spec.start(dict(params)), None))
    status = "error"
    for x0, T0 in attempts:
        try:
            res = analyze(fld, x0, config, period_guess=T0, deadline=deadline)
        except SolverTimeout as exc:
            return None, _status_of(exc), None
        except (RuntimeError, ValueError, FloatingPointError) as exc:
            status = _status_of(exc)
            continue
        m = res.measures
        if not (math.isfinite(m.lambda_) and math.isfinite(m.upsilon)):
            status = "non_finite"
            continue
        return m, STATUS_OK, (res.orbit.anchor.copy(), res.orbit.period)
    return None, status, None


def _row(values, m, status, floor) -> SweepRow:
    if m is None:
        return SweepRow(tuple(values), None, None, None, None, status)
    return SweepRow(tuple(values), m.lambda_, m.upsilon, to_db(m.lambda_, floor),
                    to_db(m.upsilon, floor), status)


def _run_line(args) -> list[SweepRow]:
    model, fixed, names, head, fast, config, warm_start = args
    spec = get_model(model) if isinstance(model, str) else model
    rows = []
    warm = None
    for v in fast:
        values = (*head, v)
        params = {**fixed, **dict(zip(names, values))}
        m, status, state = evaluate_point(spec, params, config, warm if warm_start else None)
        if state is not None:
            warm = state
        rows.append(_row(values, m, status, config.db_floor))
    return rows


def _resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        env = os.environ.get("FLOQSYM_JOBS", "").strip()
        jobs = int(env) if env else 1
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    return jobs


def iter_sweep(
    model: str | ModelSpec,
    grids: Mapping[str, Sequence[float]],
    *,
    fixed: Mapping[str, float] | None = None,
    config: SolverConfig | None = None,
    jobs: int | None = None,
    warm_start: bool = True,
) -> Iterator[SweepRow]:
    """Yield sweep rows in grid order as they complete.

    Work is split into lines along the last (fastest) axis; each line runs
    sequentially with warm starts from its previous point, and lines are
    distributed over ``jobs`` worker processes. Results do not depend on
    ``jobs``.
    """
    spec = get_model(model) if isinstance(model, str) else model
    cfg = config or SolverConfig()
    names = tuple(grids)
    if not names:
        raise ValueError("at least one swept parameter is required")
    values = [tuple(float(v) for v in grids[k]) for k in names]
    if any(len(v) == 0 for v in values):
        raise ValueError("every grid must contain at least one value")
    fixed = dict(fixed or {})
    params = spec.resolve({**fixed, **{k: v[0] for k, v in zip(names, values)}})
    for k, v in zip(names, values):
        if k not in params:
            raise KeyError(f"model {spec.name!r} has no parameter {k!r}")
        spec.check_ranges(k, v)
    heads = list(itertools.product(*values[:-1]))
    key = spec.name if isinstance(model, str) else spec
    tasks = [(key, fixed, names, h, values[-1], cfg, warm_start) for h in heads]
    jobs = _resolve_jobs(jobs)
    if jobs == 1 or len(tasks) == 1 or not isinstance(model, str):
        for t in tasks:
            yield from _run_line(t)
        return
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        for rows in pool.map(_run_line, tasks):
            yield from rows


def sweep(
    model: str | ModelSpec,
    grids: Mapping[str, Sequence[float]],
    *,
    fixed: Mapping[str, float] | None = None,
    config: SolverConfig | None = None,
    jobs: int | None = None,
    warm_start: bool = True,
) -> SweepTable:
    """Evaluate the measures on the Cartesian product of ``grids``.

    Failed points are kept as rows with a non-``ok`` status.
    """
    spec = get_model(model) if isinstance(model, str) else model
    names = tuple(grids)
    table = SweepTable(
        spec.name,
        names,
        tuple(tuple(float(v) for v in grids[k]) for k in names),
        fixed=dict(fixed or {}),
    )
    table.rows.extend(iter_sweep(model, grids, fixed=fixed, config=config, jobs=jobs,
                                 warm_start=warm_start))
    return table


@dataclass(frozen=True)
class Correlation:
    r: float
    lambda_db: np.ndarray
    upsilon_db: np.ndarray

    @property
    def n(self) -> int:
        return self.lambda_db.size


def correlate(table: SweepTable, floor: float = DB_FLOOR) -> Correlation:
    """Pearson correlation of ``lambda_db`` against ``upsilon_db``.

    Failed rows and rows at the dB floor are left out.

    Raises
    ------
    StatisticsError
        With fewer than three usable rows or a constant column.
    """
    pts = [(r.lambda_db, r.upsilon_db) for r in table.rows
           if r.ok and r.lambda_db > floor and r.upsilon_db > floor]
    if len(pts) < 3:
        raise StatisticsError(f"need at least 3 usable rows, have {len(pts)}")
    a = np.array(pts)
    x, y = a[:, 0], a[:, 1]
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise StatisticsError("a measure column is constant")
    xc, yc = x - x.mean(), y - y.mean()
    r = float(xc @ yc / math.sqrt(float(xc @ xc) * float(yc @ yc)))
    return Correlation(max(-1.0, min(1.0, r)), x, y)


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a symmetry search.

    ``false_positive`` flags a point that is rotationally symmetric
    (``lambda_min`` below the symmetry threshold) whose Floquet frame is
    nevertheless oblique (``upsilon`` above the orthogonality threshold).
    """

    params: dict[str, float]
    lambda_min: float
    upsilon: float | None
    evaluations: int
    converged: bool
    false_positive: bool
    lambda_initial: float
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "params": dict(self.params),
            "lambda_min": self.lambda_min,
            "lambda_min_db": to_db(self.lambda_min),
            "upsilon": self.upsilon,
            "upsilon_db": None if self.upsilon is None else to_db(self.upsilon),
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "converged": self.converged,
            "false_positive": self.false_positive,
            "lambda_initial": self.lambda_initial,
        }


def find_symmetry(
    model: str | ModelSpec,
    free: Sequence[str],
    initial: Sequence[float] | Mapping[str, float],
    budget: int = 200,
    *,
    fixed: Mapping[str, float] | None = None,
    config: SolverConfig | None = None,
    xtol: float = 1e-4,
    initial_step: float = 0.05,
    lambda_tol: float = 1e-6,
    upsilon_tol: float = 1e-2,
    log: Callable[[dict], None] | None = None,
) -> SearchResult:
    """Minimize the symmetry measure over the ``free`` parameters.

    Each evaluation is a full cycle solve. Once the simplex stops (converged
    or out of budget) the orthogonality measure is computed at the best
    point, and ``false_positive`` is set when that point is symmetric
    (``lambda < lambda_tol``) but not orthogonal (``upsilon > upsilon_tol``).

    Raises
    ------
    ValueError
        If ``budget`` cannot cover the first simplex; nothing is evaluated.
    SearchError
        If no evaluation succeeds.
    """
    spec = get_model(model) if isinstance(model, str) else model
    cfg = config or SolverConfig()
    free = tuple(free)
    if not free:
        raise ValueError("at least one free parameter is required")
    if isinstance(initial, Mapping):
        x0 = np.array([float(initial[k]) for k in free])
    else:
        x0 = np.atleast_1d(np.asarray(initial, dtype=float))
    if x0.size != len(free):
        raise ValueError("initial point must have one value per free parameter")
    if budget < len(free) + 1:
        raise ValueError(f"budget {budget} is below the {len(free) + 1} evaluations of the "
                         "first simplex")
    fixed = dict(fixed or {})
    spec.resolve({**fixed, **dict(zip(free, x0))})

    warm: list = [None]
    cache: dict[tuple, float] = {}

    def objective(x):
        key = tuple(float(v) for v in x)
        if key in cache:
            return cache[key]
        params = {**fixed, **dict(zip(free, key))}
        m, status, state = evaluate_point(spec, params, cfg, warm[0])
        val = m.lambda_ if m is not None else math.inf
        if state is not None and (not cache or val <= min(cache.values())):
            warm[0] = state
        cache[key] = val
        return val

    def record(rec):
        if log is not None:
            log({
                "iteration": rec["iteration"],
                "evaluations": rec["nfev"],
                "best_params": dict(zip(free, rec["best_x"])),
                "best_lambda": rec["best_f"],
                "diameter": rec["diameter"],
            })

    res = nelder_mead(objective, x0, budget=budget, xtol=xtol, initial_step=initial_step,
                      callback=record)
    lam0 = cache.get(tuple(float(v) for v in x0), math.inf)
    if not math.isfinite(res.fun):
        raise SearchError("every evaluation of the search failed")
    best = dict(zip(free, (float(v) for v in res.x)))
    params = {**fixed, **best}
    m, status, _ = evaluate_point(spec, params, cfg, warm[0])
    upsilon = m.upsilon if m is not None else None
    false_positive = bool(res.fun < lambda_tol and upsilon is not None and upsilon > upsilon_tol)
    return SearchResult(
        params=best,
        lambda_min=res.fun,
        upsilon=upsilon,
        evaluations=res.nfev,
        converged=res.converged,
        false_positive=false_positive,
        lambda_initial=lam0,
        iterations=res.nit,
    )

