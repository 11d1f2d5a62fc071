"""One-call route from a vector field to its cycle, Floquet frame and measures."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import floquet
from .measures import DB_FLOOR, MeasurePair, measure_pair
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, VectorField
from .pss import SETTLE_TOL, SHOOT_TOL, PeriodicOrbit, solve_orbit

__all__ = ["Analysis", "SolverConfig", "analyze"]


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and sizes shared by every stage of the pipeline."""

    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    horizon: float = 100.0
    settle_tol: float = SETTLE_TOL
    shoot_tol: float = SHOOT_TOL
    n_samples: int = 512
    timeout: float = 30.0
    db_floor: float = DB_FLOOR
    backend: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")


@dataclass(frozen=True, eq=False)
class Analysis:
    orbit: PeriodicOrbit
    floquet: floquet.FloquetDecomposition
    measures: MeasurePair


def analyze(
    field: VectorField,
    x0,
    config: SolverConfig | None = None,
    *,
    period_guess: float | None = None,
    deadline: float | None = None,
) -> Analysis:
    """Settle, shoot, decompose and measure.

    ``period_guess`` marks ``x0`` as a point already near the cycle, e.g. the
    anchor of a neighbouring parameter point, and skips settling.
    """
    cfg = config or SolverConfig()
    orbit = solve_orbit(
        field,
        np.asarray(x0, dtype=float),
        horizon=cfg.horizon,
        period_guess=period_guess,
        settle_tol=cfg.settle_tol,
        tol=cfg.shoot_tol,
        n_samples=cfg.n_samples,
        rtol=cfg.rtol,
        atol=cfg.atol,
        backend=cfg.backend,
        deadline=deadline,
    )
    dec = floquet.analyze(field, orbit, rtol=cfg.rtol, atol=cfg.atol, backend=cfg.backend)
    return Analysis(orbit, dec, measure_pair(orbit, dec, cfg.db_floor))
