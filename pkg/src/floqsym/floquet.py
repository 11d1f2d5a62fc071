"""Monodromy matrix, Floquet multipliers and the mode/dual-mode frames along a cycle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ode import DEFAULT_ATOL, DEFAULT_RTOL, VectorField, integrate_variational
from .pss import ConditioningError, PeriodicOrbit

__all__ = [
    "DegenerateSpectrumError",
    "FloquetDecomposition",
    "NonOscillatoryError",
    "analyze",
    "decompose",
    "monodromy",
    "propagate_modes",
]

CLUSTER_TOL = 1e-10
PHASE_TOL = 1e-4
COND_LIMIT = 1e12


class DegenerateSpectrumError(ValueError):
    """Two multipliers coincide, so the eigenbasis is not well defined."""


class NonOscillatoryError(ValueError):
    """No multiplier lies near 1; the orbit is not a limit cycle."""


@dataclass(frozen=True, eq=False)
class FloquetDecomposition:
    """Multipliers, exponents and mode frames on the normalized time grid.

    ``modes[k, i]`` is ``u_i(tau_k)`` and ``duals[k, i]`` is ``v_i(tau_k)``;
    the duals satisfy ``duals[k] @ modes[k].T == I`` (bilinear, no
    conjugation). ``realized[k, i]`` is the real frame in which each
    conjugate pair ``(u, conj(u))`` is replaced by ``(Re u, Im u)``.
    Index 0 is always the phase mode.
    """

    multipliers: np.ndarray
    exponents: np.ndarray
    tau: np.ndarray
    modes: np.ndarray
    duals: np.ndarray
    realized: np.ndarray
    pairs: tuple[tuple[int, int], ...] = ()
    periodicity_error: float = 0.0

    def __post_init__(self):
        for name in ("multipliers", "exponents", "tau", "modes", "duals", "realized"):
            a = np.array(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def dim(self) -> int:
        return self.multipliers.size

    @property
    def n_nodes(self) -> int:
        return self.tau.size

    def biorthogonality_error(self) -> float:
        """``max |(v_i, u_j) - delta_ij|`` over all nodes."""
        G = np.einsum("kia,kja->kij", self.duals, self.modes)
        return float(np.max(np.abs(G - np.eye(self.dim))))

    def phase_alignment(self, orbit: PeriodicOrbit) -> float:
        """Largest angle (rad) between ``u_1`` and the orbit tangent over the grid."""
        u = self.modes[:, 0].real
        d = orbit.derivs[: self.n_nodes]
        cos = np.einsum("ka,ka->k", u, d) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(d, axis=1)
        )
        rej = np.linalg.norm(
            u / np.linalg.norm(u, axis=1)[:, None]
            - cos[:, None] * d / np.linalg.norm(d, axis=1)[:, None],
            axis=1,
        )
        return float(np.max(np.arctan2(rej, np.abs(cos))))


def monodromy(
    field: VectorField,
    orbit: PeriodicOrbit,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
) -> np.ndarray:
    """Fundamental matrix after one period, started at the orbit anchor."""
    _, M = integrate_variational(field, orbit.anchor, (0.0, orbit.period), rtol=rtol,
                                 atol=atol, dense=False, backend=backend)
    return M


def _fix_phase(u: np.ndarray) -> np.ndarray:
    """Unit norm with the (first) largest-magnitude component real positive."""
    u = u / np.linalg.norm(u)
    mag = np.abs(u)
    j = int(np.argmax(mag >= mag.max() * (1.0 - 1e-9)))
    return u * (np.conj(u[j]) / mag[j])


def _order(lam: np.ndarray, phase: int) -> list[int]:
    rest = [i for i in range(lam.size) if i != phase]
    rest.sort(key=lambda i: (-abs(lam[i]), -lam[i].imag))
    return [phase] + rest


def decompose(M: np.ndarray, orbit: PeriodicOrbit | np.ndarray) -> FloquetDecomposition:
    """Eigen-decompose the monodromy matrix at ``tau = 0``.

    ``orbit`` may also be the normalized-time tangent ``x_s'(0)`` itself. The
    phase mode is the multiplier nearest 1 with ``u_1 = x_s'(0)``; other
    modes have unit norm with their largest component real positive, and
    conjugate partners are exact conjugates. Duals are the rows of the
    inverse eigenvector matrix.

    Raises
    ------
    DegenerateSpectrumError
        If two multipliers are closer than 1e-10.
    NonOscillatoryError
        If no multiplier lies within 1e-4 of 1.
    ConditioningError
        If the eigenvector matrix is numerically singular.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if isinstance(orbit, PeriodicOrbit):
        tangent = orbit.tau_derivs[0]
    else:
        tangent = np.asarray(orbit, dtype=float)
    lam, vecs = np.linalg.eig(M)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) < CLUSTER_TOL:
                raise DegenerateSpectrumError(
                    f"multipliers {lam[i]:.12g} and {lam[j]:.12g} coincide"
                )
    phase = int(np.argmin(np.abs(lam - 1.0)))
    if abs(lam[phase] - 1.0) > PHASE_TOL:
        raise NonOscillatoryError(f"no multiplier near 1 (closest {lam[phase]:.6g})")
    order = _order(lam, phase)
    lam = lam[order]
    vecs = vecs[:, order]

    U = np.empty((n, n), dtype=complex)
    U[0] = tangent
    pairs = []
    i = 1
    while i < n:
        u = _fix_phase(vecs[:, i])
        U[i] = u
        if lam[i].imag != 0.0 and i + 1 < n and abs(lam[i + 1] - np.conj(lam[i])) < 1e-8 * max(
            1.0, abs(lam[i])
        ):
            lam[i + 1] = np.conj(lam[i])
            U[i + 1] = np.conj(u)
            pairs.append((i, i + 1))
            i += 2
        else:
            if abs(lam[i].imag) == 0.0:
                U[i] = U[i].real
            i += 1
    cond = float(np.linalg.cond(U))
    if not math.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError("eigenvector matrix is singular", cond)
    V = np.linalg.inv(U.T)

    exps = np.log(lam.astype(complex)) / (2.0 * np.pi)
    periodicity = float(np.max(np.abs((M @ U.T).T / lam[:, None] - U)))
    return FloquetDecomposition(
        multipliers=lam,
        exponents=exps,
        tau=np.zeros(1),
        modes=U[None],
        duals=V[None],
        realized=_realify(U, pairs)[None],
        pairs=tuple(pairs),
        periodicity_error=periodicity,
    )


def _realify(U: np.ndarray, pairs) -> np.ndarray:
    R = U.real.copy()
    for a, b in pairs:
        R[b] = U[a].imag
    return R


def propagate_modes(
    field: VectorField,
    orbit: PeriodicOrbit,
    dec: FloquetDecomposition,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
) -> FloquetDecomposition:
    """Carry the ``tau = 0`` frame around the cycle on the orbit's grid.

    ``u_i(tau) = exp(-mu_i tau) Phi(t) u_i(0)`` and
    ``v_i(tau) = exp(mu_i tau) Phi(t)^{-T} v_i(0)`` with ``t = T tau / 2 pi``.

    Raises
    ------
    ConditioningError
        If some ``Phi(t)`` is too ill-conditioned to invert.
    """
    traj, M = integrate_variational(field, orbit.anchor, (0.0, orbit.period), rtol=rtol,
                                    atol=atol, backend=backend)
    Phis = traj.fundamental(orbit.times)
    Phis[0] = np.eye(orbit.dim)
    return _propagate(Phis, M, orbit.tau, dec)


def _propagate(Phis, M, tau, dec: FloquetDecomposition) -> FloquetDecomposition:
    U0 = dec.modes[0]
    V0 = dec.duals[0]
    mu = dec.exponents
    N, n = tau.size, U0.shape[0]
    modes = np.empty((N, n, n), dtype=complex)
    duals = np.empty((N, n, n), dtype=complex)
    realized = np.empty((N, n, n))
    for k in range(N):
        Phi = Phis[k]
        if k == 0 and tau[0] == 0.0:
            modes[0], duals[0] = U0, V0
        else:
            cond = float(np.linalg.cond(Phi))
            if not math.isfinite(cond) or cond > COND_LIMIT:
                raise ConditioningError(f"fundamental matrix at tau={tau[k]:.6g}", cond)
            decay = np.exp(-mu * tau[k])
            modes[k] = (Phi @ U0.T).T * decay[:, None]
            duals[k] = np.linalg.solve(Phi.T, V0.T).T / decay[:, None]
        realized[k] = _realify(modes[k], dec.pairs)
    per = float(np.max(np.abs((M @ U0.T).T * np.exp(-2.0 * np.pi * mu)[:, None] - U0)))
    return FloquetDecomposition(
        multipliers=dec.multipliers,
        exponents=mu,
        tau=tau,
        modes=modes,
        duals=duals,
        realized=realized,
        pairs=dec.pairs,
        periodicity_error=per,
    )


def analyze(
    field: VectorField,
    orbit: PeriodicOrbit,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
) -> FloquetDecomposition:
    """Monodromy, decomposition and propagation from a single variational run."""
    traj, M = integrate_variational(field, orbit.anchor, (0.0, orbit.period), rtol=rtol,
                                    atol=atol, backend=backend)
    dec = decompose(M, orbit)
    Phis = traj.fundamental(orbit.times)
    Phis[0] = np.eye(orbit.dim)
    return _propagate(Phis, M, orbit.tau, dec)
