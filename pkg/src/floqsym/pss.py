"""Periodic steady states: transient settling, period detection and shooting."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .ode import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    Trajectory,
    VectorField,
    find_crossings,
    integrate,
    integrate_variational,
)

__all__ = [
    "ConditioningError",
    "ConvergenceError",
    "NoOscillationError",
    "PeriodicOrbit",
    "Section",
    "SolverTimeout",
    "detect_period",
    "sample_cycle",
    "settle",
    "shoot",
    "solve_orbit",
]

SHOOT_TOL = 1e-10
SETTLE_TOL = 1e-6


class NoOscillationError(RuntimeError):
    """The trajectory never crossed the section (decayed or diverged)."""


class ConvergenceError(RuntimeError):
    """Newton iteration did not reach the residual tolerance.

    Attributes
    ----------
    best_residual : float
    best_state : numpy.ndarray
    best_period : float
    """

    def __init__(self, msg: str, best_residual: float, best_state=None, best_period=None):
        super().__init__(msg)
        self.best_residual = best_residual
        self.best_state = best_state
        self.best_period = best_period


class ConditioningError(RuntimeError):
    """A linear system was numerically singular; ``cond`` holds its condition number."""

    def __init__(self, msg: str, cond: float):
        super().__init__(f"{msg} (condition number {cond:.3g})")
        self.cond = cond


class SolverTimeout(RuntimeError):
    """A cooperative deadline passed between integration calls."""


def _check_deadline(deadline):
    if deadline is not None and time.monotonic() > deadline:
        raise SolverTimeout("per-point time budget exhausted")


@dataclass(frozen=True)
class Section:
    """Hyperplane ``normal . (x - point) = 0``; crossings counted in the ``normal`` direction."""

    point: np.ndarray
    normal: np.ndarray

    @classmethod
    def through(cls, field: VectorField, x) -> Section:
        """Section through ``x`` normal to the flow there."""
        x = np.array(x, dtype=float)
        f = field(x)
        nf = float(np.linalg.norm(f))
        if nf == 0.0 or not math.isfinite(nf):
            raise NoOscillationError("state is an equilibrium; no transverse section exists")
        return cls(x, f / nf)

    def value(self, x) -> float:
        return float((np.asarray(x) - self.point) @ self.normal)


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    """Converged limit cycle sampled on the normalized grid ``tau_k = 2 pi k / N``.

    ``derivs`` holds ``f`` at each sample (physical time); the derivative with
    respect to normalized time is ``(period / 2 pi) * derivs``.
    """

    anchor: np.ndarray
    period: float
    samples: np.ndarray
    derivs: np.ndarray
    residual: float
    iterations: int = 0
    phase_residual: float = 0.0
    trajectory: Trajectory | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("anchor", "samples", "derivs"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def dim(self) -> int:
        return self.anchor.size

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def tau(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_samples) / self.n_samples

    @property
    def times(self) -> np.ndarray:
        """Physical times of the samples, ``t_k = T tau_k / 2 pi``."""
        return self.period * np.arange(self.n_samples) / self.n_samples

    @property
    def tau_derivs(self) -> np.ndarray:
        return self.period / (2.0 * np.pi) * self.derivs


def settle(
    field: VectorField,
    x0,
    horizon: float = 100.0,
    section: Section | None = None,
    *,
    tol: float = SETTLE_TOL,
    max_time: float = 1e5,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
    deadline: float | None = None,
) -> np.ndarray:
    """Integrate past the transient and return a section crossing on the cycle.

    After ``horizon`` time units, successive crossings of ``section`` (by
    default the hyperplane through the current point normal to the flow)
    are collected until two consecutive ones are closer than ``tol``. If
    ``max_time`` elapses first, the latest crossing is returned anyway and
    the shooting stage is left to finish the job.

    Raises
    ------
    NoOscillationError
        If no crossing is found, e.g. the orbit decays to an equilibrium.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    x = np.asarray(x0, dtype=float)
    if horizon > 0:
        x = integrate(field, x, (0.0, horizon), rtol=rtol, atol=atol, dense=False,
                      backend=backend).final
    _check_deadline(deadline)
    if section is None:
        section = Section.through(field, x)
    elapsed = horizon
    chunk = max(10.0, min(horizon, 100.0))
    last = None
    while elapsed < max_time + horizon:
        traj = integrate(field, x, (0.0, chunk), rtol=rtol, atol=atol, backend=backend)
        crossings = find_crossings(traj, section.point, section.normal)
        for _, p in crossings:
            if last is not None and float(np.linalg.norm(p - last)) < tol:
                # a spiral into a focus also has close crossings; demand a real swing
                if float(np.max(np.ptp(traj.states, axis=0))) < 100.0 * tol:
                    raise NoOscillationError("trajectory contracts onto an equilibrium")
                return p
            last = p
        x = traj.final
        elapsed += chunk
        _check_deadline(deadline)
        if not crossings:
            if float(np.max(np.ptp(traj.states, axis=0))) < 100.0 * tol:
                raise NoOscillationError("trajectory came to rest at an equilibrium")
            chunk *= 2.0
        elif len(crossings) < 8:
            chunk *= 2.0
    if last is None:
        raise NoOscillationError("no section crossings found; the orbit does not oscillate")
    return last


def detect_period(
    field: VectorField,
    x,
    section: Section | None = None,
    *,
    max_time: float = 1e4,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
) -> float:
    """Return time between successive same-direction section crossings.

    With the default section through ``x`` itself the first return time is
    reported; crossings are located by bisection on the dense output.
    """
    x = np.asarray(x, dtype=float)
    if section is None:
        section = Section.through(field, x)
        need = 1
    else:
        need = 2
    span = 20.0
    while True:
        traj = integrate(field, x, (0.0, span), rtol=rtol, atol=atol, backend=backend)
        ts = [t for t, _ in find_crossings(traj, section.point, section.normal) if t > 1e-9]
        if len(ts) >= need:
            return ts[0] if need == 1 else ts[1] - ts[0]
        if span >= max_time:
            raise NoOscillationError(f"no return to the section within t = {span:g}")
        span = min(2.0 * span, max_time)


def shoot(
    field: VectorField,
    x0,
    T0: float,
    *,
    tol: float = SHOOT_TOL,
    max_iter: int = 25,
    n_samples: int = 512,
    max_halvings: int = 4,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
    deadline: float | None = None,
) -> PeriodicOrbit:
    """Converge ``(x, T)`` with damped Newton on the period map.

    Solves ``phi_T(x) - x = 0`` with the phase anchor
    ``f(x0) . (x - x0) = 0``; the bordered Jacobian uses the variational
    monodromy. A starting guess that already meets ``tol`` is accepted as is,
    which covers neutrally stable cycles where the Jacobian is singular.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations without reaching ``tol``.
    ConditioningError
        If the bordered Jacobian is singular (non-hyperbolic cycle).
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if not T0 > 0:
        raise ValueError("initial period must be positive")
    x0 = np.array(x0, dtype=float)
    n = field.dim
    c = field(x0)
    if not np.all(np.isfinite(c)) or float(np.linalg.norm(c)) == 0.0:
        raise NoOscillationError("initial guess is an equilibrium")

    def evaluate(x, T):
        traj, Phi = integrate_variational(field, x, (0.0, T), rtol=rtol, atol=atol,
                                          backend=backend)
        return traj, Phi, traj.final - x

    x, T = x0.copy(), float(T0)
    traj, Phi, F = evaluate(x, T)
    res = float(np.linalg.norm(F))
    best = (res, x.copy(), T)
    it = 0
    polish = True
    while res > tol or polish:
        # one extra step even when the guess already meets tol, so weakly
        # contracting cycles are pinned down well below the tolerance
        polishing = res <= tol
        polish = False
        if it >= max_iter:
            raise ConvergenceError(
                f"Newton did not converge in {max_iter} iterations (residual {best[0]:.3g})",
                best[0], best[1], best[2],
            )
        _check_deadline(deadline)
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = Phi - np.eye(n)
        J[:n, n] = field(traj.final)
        J[n, :n] = c
        rhs = -np.concatenate([F, [c @ (x - x0)]])
        cond = float(np.linalg.cond(J))
        if polishing and not cond < 1e8:
            break
        if not math.isfinite(cond) or cond > 1e13:
            raise ConditioningError("singular shooting Jacobian; cycle is not hyperbolic", cond)
        delta = np.linalg.solve(J, rhs)
        if polishing and np.linalg.norm(delta[:n]) > 1e-6 * max(1.0, np.linalg.norm(x)):
            break
        step = 1.0
        accepted = None
        for _ in range(max_halvings + 1):
            xn, Tn = x + step * delta[:n], T + step * delta[n]
            trial = None
            if Tn > 0:
                try:
                    trial = evaluate(xn, Tn)
                except Exception:
                    trial = None
            if trial is not None:
                accepted = (xn, Tn, trial)
                if float(np.linalg.norm(trial[2])) < res:
                    break
            step *= 0.5
        if accepted is None:
            if polishing:
                break
            raise ConvergenceError("damped Newton step left the integrable region",
                                   best[0], best[1], best[2])
        rn = float(np.linalg.norm(accepted[2][2]))
        if polishing and rn >= res:
            break
        it += 1
        x, T, (traj, Phi, F) = accepted
        res = rn
        if res < best[0]:
            best = (res, x.copy(), T)

    if float(np.linalg.norm(field(x))) <= 1e-12 * max(1.0, float(np.linalg.norm(x))):
        raise ConvergenceError("Newton iteration converged onto an equilibrium",
                               res, x.copy(), T)
    samples = sample_cycle(field, x, T, n_samples, rtol=rtol, atol=atol, backend=backend)
    derivs = np.array([field(s) for s in samples])
    return PeriodicOrbit(
        anchor=x,
        period=T,
        samples=samples,
        derivs=derivs,
        residual=res,
        iterations=it,
        phase_residual=abs(float(c @ (x - x0))),
        trajectory=traj,
    )


def sample_cycle(
    field: VectorField,
    x,
    period: float,
    n_samples: int = 512,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
) -> np.ndarray:
    """States at ``t_k = k T / N`` obtained by integrating node to node.

    Every sample is an accepted step endpoint, which avoids the larger error
    of the dense-output interpolant.
    """
    times = period * np.arange(n_samples + 1) / n_samples
    out = np.empty((n_samples, np.size(x)))
    out[0] = x
    cur = np.asarray(x, dtype=float)
    for k in range(1, n_samples):
        cur = integrate(field, cur, (times[k - 1], times[k]), rtol=rtol, atol=atol,
                        dense=False, backend=backend).final
        out[k] = cur
    return out


def solve_orbit(
    field: VectorField,
    x0,
    *,
    horizon: float = 100.0,
    period_guess: float | None = None,
    settle_tol: float = SETTLE_TOL,
    tol: float = SHOOT_TOL,
    n_samples: int = 512,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
    deadline: float | None = None,
) -> PeriodicOrbit:
    """Settle, estimate the period and shoot; the standard route to a cycle.

    When ``period_guess`` is given, ``x0`` is taken to be near the cycle
    already (a warm start) and settling is skipped.
    """
    kw = dict(rtol=rtol, atol=atol, backend=backend)
    if period_guess is None:
        x0 = settle(field, x0, horizon, tol=settle_tol, deadline=deadline, **kw)
        _check_deadline(deadline)
        period_guess = detect_period(field, x0, **kw)
    return shoot(field, x0, period_guess, tol=tol, n_samples=n_samples,
                 deadline=deadline, **kw)
