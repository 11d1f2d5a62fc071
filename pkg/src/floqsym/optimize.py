"""Derivative-free simplex minimization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["SimplexResult", "nelder_mead"]


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    nit: int
    converged: bool
    history: list[dict] = field(default_factory=list)


def _diameter(simplex: np.ndarray) -> float:
    best = simplex[0]
    spread = float(np.max(np.abs(simplex[1:] - best)))
    return spread / max(float(np.max(np.abs(best))), 1e-12)


def nelder_mead(
    fun: Callable[[np.ndarray], float],
    x0,
    *,
    budget: int = 200,
    xtol: float = 1e-4,
    initial_step: float = 0.05,
    alpha: float = 1.0,
    gamma: float = 2.0,
    rho: float = 0.5,
    shrink: float = 0.5,
    callback: Callable[[dict], None] | None = None,
) -> SimplexResult:
    """Minimize ``fun`` with the Nelder-Mead simplex method.

    The starting simplex perturbs each coordinate by ``initial_step``
    relative (absolute 2.5e-4 for zero coordinates). Iteration stops when the
    relative simplex diameter drops below ``xtol`` or after ``budget``
    function evaluations. ``fun`` may return ``inf`` for infeasible points.
    ``callback`` receives one record per iteration with the running best.

    Raises
    ------
    ValueError
        If the budget cannot cover the initial simplex.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    if budget < n + 1:
        raise ValueError(f"budget {budget} is below the {n + 1} evaluations of the first simplex")

    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        v = float(fun(x))
        return v if np.isfinite(v) else np.inf

    simplex = np.empty((n + 1, n))
    simplex[0] = x0
    for i in range(n):
        v = x0.copy()
        v[i] = v[i] * (1.0 + initial_step) if v[i] != 0 else 2.5e-4
        simplex[i + 1] = v
    values = np.array([f(v) for v in simplex])

    history: list[dict] = []
    nit = 0
    converged = False
    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diam = _diameter(simplex)
        record = {
            "iteration": nit,
            "nfev": nfev,
            "best_x": simplex[0].tolist(),
            "best_f": float(values[0]),
            "diameter": diam,
        }
        history.append(record)
        if callback is not None:
            callback(record)
        if np.isfinite(values[0]) and diam < xtol:
            converged = True
            break
        if nfev >= budget:
            break
        nit += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + alpha * (centroid - worst)
        fr = f(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            if nfev >= budget:
                simplex[-1], values[-1] = xr, fr
                continue
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if nfev >= budget:
            continue
        if fr < values[-1]:
            xc = centroid + rho * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + rho * (worst - centroid)
            fc = f(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            if nfev >= budget:
                break
            simplex[i] = simplex[0] + shrink * (simplex[i] - simplex[0])
            values[i] = f(simplex[i])

    return SimplexResult(simplex[0].copy(), float(values[0]), nfev, nit, converged, history)
