"""Adaptive integration of autonomous ODEs and their variational equations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _backend, _fallback

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
EVENT_TOL = 1e-12

_STATUS_REASON = {
    _fallback.ST_UNDERFLOW: "step size underflow",
    _fallback.ST_NONFINITE: "non-finite state",
    _fallback.ST_MAXSTEPS: "maximum number of steps exceeded",
    _fallback.ST_DOMAIN: "vector field undefined at state",
}

__all__ = [
    "DEFAULT_ATOL",
    "DEFAULT_RTOL",
    "DomainError",
    "IntegrationError",
    "Trajectory",
    "VectorField",
    "fd_jacobian",
    "find_crossings",
    "flow_jacobian_fd",
    "integrate",
    "integrate_variational",
]


class DomainError(ValueError):
    """Vector field evaluated outside its domain (e.g. at an excluded fixed point)."""


class IntegrationError(RuntimeError):
    """Integration stopped early.

    Attributes
    ----------
    reason : str
        Short description of the failure.
    t : float
        Time of the last accepted step.
    state : numpy.ndarray
        State at ``t``.
    """

    def __init__(self, reason: str, t: float, state: np.ndarray):
        super().__init__(f"{reason} at t={t:.17g}")
        self.reason = reason
        self.t = t
        self.state = state


def fd_jacobian(rhs: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian with step sqrt(eps) * max(1, |x_j|)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    J = np.empty((n, n))
    base = np.sqrt(np.finfo(float).eps)
    for j in range(n):
        h = base * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(rhs(xp)) - np.asarray(rhs(xm))) / (2.0 * h)
    return J


@dataclass(frozen=True, eq=False)
class VectorField:
    """Autonomous right-hand side ``x' = f(x)`` with optional analytic Jacobian.

    ``kernel`` is ``(model_id, packed_params)`` for fields the compiled
    extension can evaluate natively; user fields leave it ``None`` and run
    through the Python integrator.
    """

    dim: int
    rhs: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None
    params: tuple[tuple[str, float], ...] = ()
    name: str = "custom"
    kernel: tuple[int, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.kernel is not None:
            packed = np.ascontiguousarray(self.kernel[1], dtype=float)
            packed.setflags(write=False)
            object.__setattr__(self, "kernel", (int(self.kernel[0]), packed))

    def __call__(self, x) -> np.ndarray:
        return self.eval(x)

    def eval(self, x) -> np.ndarray:
        return np.asarray(self.rhs(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float)
        return fd_jacobian(self.rhs, x)

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted steps of one integration plus the dense-output polynomials.

    ``coeffs[k]`` holds the five coefficient vectors of the quartic
    continuous extension on ``[times[k], times[k+1]]``.
    """

    times: np.ndarray
    states: np.ndarray
    coeffs: np.ndarray
    nfev: int = 0
    tangent: Trajectory | None = None

    def __post_init__(self):
        for name in ("times", "states", "coeffs"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def _locate(self, t: np.ndarray) -> np.ndarray:
        times = self.times
        if times[-1] >= times[0]:
            k = np.searchsorted(times, t, side="right") - 1
        else:
            k = times.size - 1 - np.searchsorted(times[::-1], t, side="left")
        return np.clip(k, 0, max(times.size - 2, 0))

    def __call__(self, t):
        """Evaluate the dense output at scalar or array ``t`` (shape ``(..., n)``)."""
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        t_arr = np.atleast_1d(t_arr)
        lo, hi = sorted(self.span)
        if np.any(t_arr < lo - 1e-12 * max(1.0, abs(lo))) or np.any(
            t_arr > hi + 1e-12 * max(1.0, abs(hi))
        ):
            raise ValueError("evaluation time outside the integrated span")
        if self.times.size == 1:
            out = np.broadcast_to(self.states[0], t_arr.shape + (self.dim,)).copy()
            return out[0] if scalar else out
        if self.coeffs.shape[0] == 0:
            raise ValueError("trajectory was integrated without dense output")
        k = self._locate(t_arr)
        t0 = self.times[k]
        h = self.times[k + 1] - t0
        th = ((t_arr - t0) / h)[:, None]
        th1 = 1.0 - th
        c = self.coeffs[k]
        out = c[:, 0] + th * (c[:, 1] + th1 * (c[:, 2] + th * (c[:, 3] + th1 * c[:, 4])))
        # nodes reproduce stored states exactly
        at_lo = t_arr == t0
        at_hi = t_arr == self.times[k + 1]
        out[at_lo] = self.states[k[at_lo]]
        out[at_hi] = self.states[k[at_hi] + 1]
        return out[0] if scalar else out

    def fundamental(self, t) -> np.ndarray:
        """Fundamental matrix at ``t`` for variational trajectories."""
        if self.tangent is None:
            raise ValueError("trajectory carries no variational data")
        n = self.dim
        flat = self.tangent(t)
        return flat.reshape(flat.shape[:-1] + (n, n))


def _run(field: VectorField, x0, span, rtol, atol, variational, max_steps, dense, backend):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (field.dim,):
        raise ValueError(f"initial state must have shape ({field.dim},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    t0, t1 = (float(s) for s in span)
    which = _backend.resolve(backend, field.kernel is not None)
    if which == "compiled":
        model_id, packed = field.kernel
        status, times, states, coeffs, nfev = _backend._kernels.dopri5(
            model_id, packed, np.ascontiguousarray(x0), t0, t1, rtol, atol,
            variational, max_steps, 0.0, dense,
        )
    else:
        jac = field.jacobian
        status, times, states, coeffs, nfev = _fallback.dopri5(
            field.eval, jac, x0, t0, t1, rtol, atol, variational, max_steps, 0.0, dense,
        )
    if status != _fallback.ST_OK:
        raise IntegrationError(
            _STATUS_REASON.get(status, "integration failure"),
            float(times[-1]),
            states[-1, : field.dim].copy(),
        )
    return times, states, coeffs, nfev


def integrate(
    field: VectorField,
    x0,
    span: Sequence[float],
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_steps: int = 2_000_000,
    dense: bool = True,
    backend: str | None = None,
) -> Trajectory:
    """Integrate ``field`` from ``x0`` over ``span = (t0, t1)``.

    Raises
    ------
    IntegrationError
        On step-size underflow, non-finite states, domain faults or when
        ``max_steps`` is exceeded; carries the last valid state and time.
    """
    times, states, coeffs, nfev = _run(
        field, x0, span, rtol, atol, False, max_steps, dense, backend
    )
    return Trajectory(times, states, coeffs, nfev)


def integrate_variational(
    field: VectorField,
    x0,
    span: Sequence[float],
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_steps: int = 2_000_000,
    dense: bool = True,
    backend: str | None = None,
) -> tuple[Trajectory, np.ndarray]:
    """Integrate the state together with ``Phi' = J(x) Phi``, ``Phi(t0) = I``.

    The tangent block shares the step-size control of the state. Returns the
    state trajectory (with ``tangent`` dense output attached) and
    ``Phi(t1)``.
    """
    n = field.dim
    times, states, coeffs, nfev = _run(
        field, x0, span, rtol, atol, True, max_steps, dense, backend
    )
    tangent = Trajectory(times, states[:, n:], coeffs[:, :, n:], nfev)
    traj = Trajectory(times, states[:, :n], coeffs[:, :, :n], nfev, tangent)
    return traj, states[-1, n:].reshape(n, n).copy()


def flow_jacobian_fd(
    field: VectorField,
    x0,
    tau: float,
    h: float = 1e-5,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    backend: str | None = None,
) -> np.ndarray:
    """Central-difference approximation of the flow Jacobian ``d phi_tau / d x0``."""
    if h <= 0:
        raise ValueError("perturbation size must be positive")
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    out = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        xp = integrate(field, x0 + e, (0.0, tau), rtol=rtol, atol=atol, dense=False,
                       backend=backend).final
        xm = integrate(field, x0 - e, (0.0, tau), rtol=rtol, atol=atol, dense=False,
                       backend=backend).final
        out[:, j] = (xp - xm) / (2.0 * h)
    return out


def find_crossings(
    traj: Trajectory,
    point,
    normal,
    *,
    direction: int = 1,
    tol: float = EVENT_TOL,
) -> list[tuple[float, np.ndarray]]:
    """Locate crossings of the hyperplane ``normal . (x - point) = 0``.

    Only crossings in ``direction`` (+1: from negative to non-negative side)
    are returned, each refined by bisection on the dense output to ``tol``
    in time.
    """
    point = np.asarray(point, dtype=float)
    normal = np.asarray(normal, dtype=float)
    g = (traj.states - point) @ normal
    if direction >= 0:
        idx = np.nonzero((g[:-1] < 0.0) & (g[1:] >= 0.0))[0]
    else:
        idx = np.nonzero((g[:-1] > 0.0) & (g[1:] <= 0.0))[0]
    out = []
    for k in idx:
        a, b = float(traj.times[k]), float(traj.times[k + 1])
        ga = g[k]
        if g[k + 1] == 0.0:
            out.append((b, traj.states[k + 1].copy()))
            continue
        while abs(b - a) > tol:
            m = 0.5 * (a + b)
            if m == a or m == b:
                break
            gm = float((traj(m) - point) @ normal)
            if (gm < 0.0) == (ga < 0.0) and gm != 0.0:
                a, ga = m, gm
            else:
                b = m
        out.append((b, traj(b)))
    return out
