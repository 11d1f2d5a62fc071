"""Rotational-symmetry and frame-orthogonality measures of a limit cycle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .floquet import FloquetDecomposition
from .pss import PeriodicOrbit

__all__ = [
    "DB_FLOOR",
    "MeasureError",
    "MeasurePair",
    "lambda_measure",
    "measure_pair",
    "theta_pair",
    "to_db",
    "upsilon_measure",
]

DB_FLOOR = -200.0


class MeasureError(ValueError):
    """Degenerate input: a zero-radius orbit or a zero-length mode vector."""


def to_db(value: float, floor: float = DB_FLOOR) -> float:
    """``10 log10(value)``, clamped to ``floor`` for values below 1e-20."""
    value = float(value)
    if value < 0 or math.isnan(value):
        raise MeasureError(f"dB conversion needs a non-negative value, got {value!r}")
    if value < 1e-20:
        return floor
    return max(10.0 * math.log10(value), floor)


def lambda_measure(orbit: PeriodicOrbit | np.ndarray) -> float:
    """Mean relative shortfall of the squared radius from its maximum.

    Zero exactly when the sampled cycle lies on a sphere about the origin.
    Accepts a :class:`PeriodicOrbit` or an ``(N, n)`` array of samples on a
    uniform grid over one period, for which the trapezoid rule reduces to
    the sample mean.
    """
    samples = orbit.samples if isinstance(orbit, PeriodicOrbit) else np.asarray(orbit, float)
    rho = np.einsum("ka,ka->k", samples, samples)
    rho_max = float(rho.max())
    if not rho_max > 0:
        raise MeasureError("orbit collapses onto the origin")
    return abs(float(np.mean(rho / rho_max - 1.0)))


def _deviation(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    if np.any(nu == 0) or np.any(nv == 0):
        raise MeasureError("zero-length mode vector")
    uh = u / nu[..., None]
    vh = v / nv[..., None]
    c = np.einsum("...a,...a->...", uh, vh)
    s = np.linalg.norm(vh - c[..., None] * uh, axis=-1)
    # |angle - pi/2| = arcsin|cos|, evaluated without arcsin's loss near 1
    return np.arctan2(np.abs(c), s)


def theta_pair(u_i, u_j) -> float:
    """Largest deviation from a right angle between two vector sequences.

    ``u_i`` and ``u_j`` are ``(N, n)`` (or single ``(n,)``) real vectors; the
    result lies in ``[0, pi/2]``.
    """
    u_i = np.atleast_2d(np.asarray(u_i, dtype=float))
    u_j = np.atleast_2d(np.asarray(u_j, dtype=float))
    return float(np.max(_deviation(u_i, u_j)))


def upsilon_measure(dec: FloquetDecomposition) -> tuple[float, np.ndarray]:
    """Worst pairwise deviation from orthogonality in the realified frame.

    Returns ``(upsilon, table)`` with ``table[i, j]`` the per-pair maximum
    over the grid; the diagonal is zero and excluded.
    """
    R = dec.realized
    n = R.shape[1]
    table = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            table[i, j] = table[j, i] = theta_pair(R[:, i], R[:, j])
    return float(table.max()) if n > 1 else 0.0, table


@dataclass(frozen=True, eq=False)
class MeasurePair:
    """Symmetry measure ``lambda_``, orthogonality measure ``upsilon`` and the angle table."""

    lambda_: float
    upsilon: float
    theta_table: np.ndarray
    floor: float = DB_FLOOR

    def __post_init__(self):
        t = np.array(self.theta_table, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "theta_table", t)

    @property
    def lambda_db(self) -> float:
        return to_db(self.lambda_, self.floor)

    @property
    def upsilon_db(self) -> float:
        return to_db(self.upsilon, self.floor)

    def summary(self) -> str:
        return (f"lambda={self.lambda_:.6e} ({self.lambda_db:.2f} dB) "
                f"upsilon={self.upsilon:.6e} rad ({self.upsilon_db:.2f} dB)")


def measure_pair(orbit: PeriodicOrbit, dec: FloquetDecomposition,
                 floor: float = DB_FLOOR) -> MeasurePair:
    ups, table = upsilon_measure(dec)
    return MeasurePair(lambda_measure(orbit), ups, table, floor)
