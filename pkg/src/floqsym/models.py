"""Oscillator vector fields with their default circuit parameters.

All fields are expressed in Cartesian state coordinates so a single shooting
and Floquet pipeline serves every model.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Literal

import numpy as np

from .ode import DomainError, VectorField

# ids understood by the compiled kernel
PNF_ID, VDP_ID, TCR_ID, FET_ID, CE_ID = 1, 2, 3, 4, 5

__all__ = [
    "CounterexampleParams",
    "FetParams",
    "MODELS",
    "ModelSpec",
    "PnfParams",
    "TcrParams",
    "VdpParams",
    "counterexample_field",
    "fet_field",
    "get_model",
    "make_field",
    "pnf_field",
    "tcr_field",
    "trans_conductance",
    "vdp_field",
]


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


# ---------------------------------------------------------------------------
# polar normal form


@dataclass(frozen=True)
class PnfParams:
    """Polar normal-form oscillator: ``m`` extra real modes, ``k`` rotating pairs."""

    mu: float = 0.5
    beta: tuple[float, ...] = (0.2,)
    sigma: tuple[float, ...] = (0.1,)
    nu: tuple[float, ...] = (0.3,)

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        object.__setattr__(self, "nu", tuple(float(v) for v in self.nu))
        _positive("mu", self.mu)
        for b in self.beta:
            _positive("beta_i", b)
        for s in self.sigma:
            _positive("sigma_i", s)
        if len(self.sigma) != len(self.nu):
            raise ValueError("sigma and nu must have the same length k")
        for v in self.nu:
            if v == 0 or not math.isfinite(v):
                raise ValueError("nu_i must be nonzero and finite")

    @property
    def m(self) -> int:
        return len(self.beta)

    @property
    def k(self) -> int:
        return len(self.sigma)

    @property
    def dim(self) -> int:
        return 2 + self.m + 2 * self.k

    def packed(self) -> np.ndarray:
        return np.array([self.m, self.k, self.mu, *self.beta, *self.sigma, *self.nu], float)


def pnf_field(params: PnfParams) -> VectorField:
    """Polar normal form in Cartesian coordinates ``(y1, y2, w..., z...)``.

    The phase advances at unit rate, the radius relaxes to 1 at rate ``mu``,
    each ``w_i`` decays at ``beta_i`` and each ``z`` pair spirals in with
    contraction ``sigma_i`` and rotation ``nu_i``. Undefined at ``y1 = y2 = 0``.
    """
    mu = params.mu
    beta = np.array(params.beta)
    sigma = np.array(params.sigma)
    nu = np.array(params.nu)
    m, k, n = params.m, params.k, params.dim

    def rhs(x):
        r = math.hypot(x[0], x[1])
        if r == 0.0:
            raise DomainError("polar normal form is undefined at r = 0")
        out = np.empty(n)
        out[0] = mu * (1.0 - r) * x[0] - x[1]
        out[1] = mu * (1.0 - r) * x[1] + x[0]
        out[2:2 + m] = -beta * x[2:2 + m]
        z1 = x[2 + m::2]
        z2 = x[3 + m::2]
        out[2 + m::2] = -sigma * z1 + nu * z2
        out[3 + m::2] = -sigma * z2 - nu * z1
        return out

    def jac(x):
        r = math.hypot(x[0], x[1])
        if r == 0.0:
            raise DomainError("polar normal form is undefined at r = 0")
        J = np.zeros((n, n))
        J[0, 0] = mu * (1.0 - r) - mu * x[0] * x[0] / r
        J[0, 1] = -mu * x[0] * x[1] / r - 1.0
        J[1, 0] = -mu * x[0] * x[1] / r + 1.0
        J[1, 1] = mu * (1.0 - r) - mu * x[1] * x[1] / r
        for i in range(m):
            J[2 + i, 2 + i] = -beta[i]
        off = 2 + m
        for i in range(k):
            a, b = off + 2 * i, off + 2 * i + 1
            J[a, a] = J[b, b] = -sigma[i]
            J[a, b] = nu[i]
            J[b, a] = -nu[i]
        return J

    flat = [("mu", mu)]
    flat += [(f"beta_{i + 1}", b) for i, b in enumerate(params.beta)]
    flat += [(f"sigma_{i + 1}", s) for i, s in enumerate(params.sigma)]
    flat += [(f"nu_{i + 1}", v) for i, v in enumerate(params.nu)]
    return VectorField(n, rhs, jac, tuple(flat), "pnf", (PNF_ID, params.packed()))


# ---------------------------------------------------------------------------
# van der Pol


@dataclass(frozen=True)
class VdpParams:
    c0: float = 1.0
    eps: float = 0.1

    def __post_init__(self):
        _positive("c0", self.c0)
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ValueError("eps must be non-negative")


def vdp_field(params: VdpParams) -> VectorField:
    """``x' = c0 y``, ``y' = -x + eps (1 - x^2) y``; ``c0 != 1`` skews the cycle."""
    c0, eps = params.c0, params.eps

    def rhs(x):
        return np.array([c0 * x[1], -x[0] + eps * (1.0 - x[0] * x[0]) * x[1]])

    def jac(x):
        return np.array([[0.0, c0], [-1.0 - 2.0 * eps * x[0] * x[1], eps * (1.0 - x[0] * x[0])]])

    return VectorField(2, rhs, jac, (("c0", c0), ("eps", eps)), "vdp",
                       (VDP_ID, np.array([c0, eps])))


# ---------------------------------------------------------------------------
# transformer-coupled resonator oscillator


@dataclass(frozen=True)
class TcrParams:
    alpha: float = 1.0 / math.sqrt(2.0)
    beta: float = 1.0 / math.sqrt(2.0)
    z0: float = 1.0
    sigma_a: float = 2.0
    sigma_b: float = 2.0
    q_a: float = 100.0
    q_b: float = 100.0
    q_s: float = 100.0
    p: float = 0.06
    q1: float = 0.003
    q2: float = 0.003

    def __post_init__(self):
        for name in ("z0", "sigma_a", "sigma_b", "q_a", "q_b", "q_s"):
            _positive(name, getattr(self, name))
        if not self.alpha ** 2 + self.beta ** 2 > 0:
            raise ValueError("alpha^2 + beta^2 must be positive")

    def packed(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.z0, self.sigma_a, self.sigma_b,
                         self.q_a, self.q_b, self.q_s, self.p, self.q1, self.q2])


def tcr_field(params: TcrParams) -> VectorField:
    """Three-state transformer-coupled resonator, state ``(y, v, w)``.

    The inductor couples into capacitor ``a`` with the opposite sign to
    capacitor ``b`` so that the linear part is a lossy LC resonance.
    """
    P = params
    a, b, z0 = P.alpha, P.beta, P.z0
    an = a / (a * a + b * b)
    bn = b / (a * a + b * b)

    def rhs(x):
        y, v, w = x
        s = a * y - b * w
        f = P.p - (P.q1 * (z0 * s) ** 2 + P.q2 * (v / z0) ** 2)
        return np.array([
            (-y / P.q_a - an * v / z0 + an * z0 * s * f) / P.sigma_a,
            -v / P.q_s + z0 * s + (v / z0) * f,
            (-w / P.q_b + bn * v / z0 + bn * z0 * s * f) / P.sigma_b,
        ])

    def jac(x):
        y, v, w = x
        s = a * y - b * w
        f = P.p - (P.q1 * (z0 * s) ** 2 + P.q2 * (v / z0) ** 2)
        fy = -2.0 * P.q1 * z0 * z0 * s * a
        fw = 2.0 * P.q1 * z0 * z0 * s * b
        fv = -2.0 * P.q2 * v / (z0 * z0)
        return np.array([
            [(-1.0 / P.q_a + an * z0 * (a * f + s * fy)) / P.sigma_a,
             (-an / z0 + an * z0 * s * fv) / P.sigma_a,
             an * z0 * (-b * f + s * fw) / P.sigma_a],
            [z0 * a + (v / z0) * fy,
             -1.0 / P.q_s + f / z0 + (v / z0) * fv,
             -z0 * b + (v / z0) * fw],
            [bn * z0 * (a * f + s * fy) / P.sigma_b,
             (bn / z0 + bn * z0 * s * fv) / P.sigma_b,
             (-1.0 / P.q_b + bn * z0 * (-b * f + s * fw)) / P.sigma_b],
        ])

    return VectorField(3, rhs, jac, tuple(asdict(P).items()), "tcr", (TCR_ID, P.packed()))


# ---------------------------------------------------------------------------
# FET differential-pair oscillator


@dataclass(frozen=True)
class FetParams:
    z0: float = 1.0
    sigma_1: float = 2.0
    sigma_2: float = 2.0
    kappa_1: float = 2.0
    kappa_2: float = 2.0
    q_p1: float = 100.0
    q_p2: float = 100.0
    q_s1: float = 100.0
    q_s2: float = 100.0
    i_b: float = 8e-3
    k_n: float = 2.0
    topology: Literal["parallel", "series", "both"] = "both"

    def __post_init__(self):
        for f_ in fields(self):
            if f_.name != "topology":
                _positive(f_.name, getattr(self, f_.name))
        if self.topology not in ("parallel", "series", "both"):
            raise ValueError("topology must be 'parallel', 'series' or 'both'")

    @property
    def g_m(self) -> float:
        return math.sqrt(self.k_n * self.i_b)

    def packed(self) -> np.ndarray:
        par = 1.0 if self.topology in ("parallel", "both") else 0.0
        ser = 1.0 if self.topology in ("series", "both") else 0.0
        return np.array([self.z0, self.sigma_1, self.sigma_2, self.kappa_1, self.kappa_2,
                         self.q_p1, self.q_p2, self.q_s1, self.q_s2, self.i_b, self.k_n,
                         par, ser])


def trans_conductance(zeta, i_b: float, k_n: float):
    """Arctan differential-pair current; slope sqrt(k_n i_b) at the origin, saturates at +-i_b."""
    g_m = math.sqrt(k_n * i_b)
    return i_b * (2.0 / math.pi) * np.arctan((math.pi / 2.0) * (g_m / i_b) * np.asarray(zeta))


def fet_field(params: FetParams) -> VectorField:
    """Four-state differential-pair LC oscillator, state ``(q, r, s, u)``."""
    P = params
    z0 = P.z0
    par = 1.0 if P.topology in ("parallel", "both") else 0.0
    ser = 1.0 if P.topology in ("series", "both") else 0.0
    g_m = P.g_m
    gain = (math.pi / 2.0) * (g_m / P.i_b)

    def rhs(x):
        q, r, s, u = x
        d = float(trans_conductance(z0 * (q - s), P.i_b, P.k_n))
        return np.array([
            (-par * q / P.q_p1 - r / z0 + d) / P.sigma_1,
            (z0 * q - ser * r / P.q_s1) / P.kappa_1,
            (-par * s / P.q_p2 - u / z0 - d) / P.sigma_2,
            (z0 * s - ser * u / P.q_s2) / P.kappa_2,
        ])

    def jac(x):
        q, _, s, _ = x
        u_ = gain * z0 * (q - s)
        dp = g_m * z0 / (1.0 + u_ * u_)
        return np.array([
            [(-par / P.q_p1 + dp) / P.sigma_1, -1.0 / (z0 * P.sigma_1), -dp / P.sigma_1, 0.0],
            [z0 / P.kappa_1, -ser / (P.q_s1 * P.kappa_1), 0.0, 0.0],
            [-dp / P.sigma_2, 0.0, (-par / P.q_p2 + dp) / P.sigma_2, -1.0 / (z0 * P.sigma_2)],
            [0.0, 0.0, z0 / P.kappa_2, -ser / (P.q_s2 * P.kappa_2)],
        ])

    flat = tuple((k, v) for k, v in asdict(P).items() if k != "topology")
    return VectorField(4, rhs, jac, flat, "fet", (FET_ID, P.packed()))


# ---------------------------------------------------------------------------
# symmetric cycle without orthogonal Floquet frame


@dataclass(frozen=True)
class CounterexampleParams:
    mu: float = 0.5
    kappa: float = 0.3

    def __post_init__(self):
        _positive("mu", self.mu)
        if not math.isfinite(self.kappa):
            raise ValueError("kappa must be finite")


def counterexample_field(mu: float = 0.5, kappa: float = 0.3) -> VectorField:
    """Planar ``r' = mu r (1 - r)``, ``phi' = 1 + kappa (r - 1)`` in Cartesian form.

    The unit circle is the limit cycle for every ``kappa``; any nonzero
    ``kappa`` makes the amplitude mode oblique to the phase mode.
    """
    CounterexampleParams(mu, kappa)

    def rhs(x):
        r = math.hypot(x[0], x[1])
        if r == 0.0:
            raise DomainError("counterexample field is undefined at r = 0")
        g = 1.0 + kappa * (r - 1.0)
        return np.array([mu * (1.0 - r) * x[0] - g * x[1], mu * (1.0 - r) * x[1] + g * x[0]])

    def jac(x):
        r = math.hypot(x[0], x[1])
        if r == 0.0:
            raise DomainError("counterexample field is undefined at r = 0")
        g = 1.0 + kappa * (r - 1.0)
        x0, x1 = x
        return np.array([
            [mu * (1.0 - r) - mu * x0 * x0 / r - kappa * x0 * x1 / r,
             -mu * x0 * x1 / r - g - kappa * x1 * x1 / r],
            [-mu * x0 * x1 / r + g + kappa * x0 * x0 / r,
             mu * (1.0 - r) - mu * x1 * x1 / r + kappa * x0 * x1 / r],
        ])

    return VectorField(2, rhs, jac, (("mu", mu), ("kappa", kappa)), "counterexample",
                       (CE_ID, np.array([mu, kappa])))


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class ModelSpec:
    """A named model preset: flat parameter defaults, builder and start state."""

    name: str
    defaults: dict[str, float]
    build: Callable[[dict[str, float]], VectorField]
    initial_state: Callable[[dict[str, float]], np.ndarray]
    ranges: dict[str, tuple[float, float]] = field(default_factory=dict)

    def resolve(self, overrides: dict | None = None) -> dict:
        params = dict(self.defaults)
        for key, value in (overrides or {}).items():
            if key not in params:
                raise KeyError(f"model {self.name!r} has no parameter {key!r}")
            params[key] = value
        return params

    def field(self, overrides: dict | None = None) -> VectorField:
        return self.build(self.resolve(overrides))

    def start(self, overrides: dict | None = None) -> np.ndarray:
        return self.initial_state(self.resolve(overrides))

    def check_ranges(self, name: str, values) -> None:
        lo, hi = self.ranges.get(name, (-math.inf, math.inf))
        vals = np.asarray(values, dtype=float)
        if np.any(vals < lo) or np.any(vals > hi):
            warnings.warn(
                f"{self.name}.{name} grid leaves the documented range [{lo}, {hi}]",
                stacklevel=2,
            )


def _pnf_params(p: dict) -> PnfParams:
    m, k = int(p["m"]), int(p["k"])
    return PnfParams(
        mu=p["mu"],
        beta=tuple(p.get(f"beta_{i + 1}", 0.2) for i in range(m)),
        sigma=tuple(p.get(f"sigma_{i + 1}", 0.1) for i in range(k)),
        nu=tuple(p.get(f"nu_{i + 1}", 0.3) for i in range(k)),
    )


class _PnfSpec(ModelSpec):
    def resolve(self, overrides=None):
        overrides = dict(overrides or {})
        params = dict(self.defaults)
        m = int(overrides.get("m", params["m"]))
        k = int(overrides.get("k", params["k"]))
        for i in range(m):
            params.setdefault(f"beta_{i + 1}", 0.2)
        for i in range(k):
            params.setdefault(f"sigma_{i + 1}", 0.1)
            params.setdefault(f"nu_{i + 1}", 0.3)
        for key in list(params):
            idx = key.rsplit("_", 1)[-1]
            if key.startswith("beta_") and int(idx) > m:
                del params[key]
            if key.startswith(("sigma_", "nu_")) and int(idx) > k:
                del params[key]
        for key, value in overrides.items():
            if key not in params:
                raise KeyError(f"model {self.name!r} has no parameter {key!r}")
            params[key] = value
        return params


def _pnf_start(p: dict) -> np.ndarray:
    m, k = int(p["m"]), int(p["k"])
    x = np.zeros(2 + m + 2 * k)
    x[0] = 1.5
    x[2:] = 0.3
    return x


def _fet_build(p: dict) -> VectorField:
    p = dict(p)
    topo = {0: "both", 1: "parallel", 2: "series"}[int(p.pop("topology"))]
    return fet_field(FetParams(**p, topology=topo))


MODELS: dict[str, ModelSpec] = {
    "pnf": _PnfSpec(
        "pnf",
        {"m": 1, "k": 1, "mu": 0.5, "beta_1": 0.2, "sigma_1": 0.1, "nu_1": 0.3},
        lambda p: pnf_field(_pnf_params(p)),
        _pnf_start,
        {"mu": (1e-3, 10.0)},
    ),
    "vdp": ModelSpec(
        "vdp",
        {"c0": 1.0, "eps": 0.1},
        lambda p: vdp_field(VdpParams(**p)),
        lambda p: np.array([2.0, 0.0]),
        {"c0": (0.05, 20.0), "eps": (0.0, 5.0)},
    ),
    "tcr": ModelSpec(
        "tcr",
        {f.name: f.default for f in fields(TcrParams)},
        lambda p: tcr_field(TcrParams(**p)),
        lambda p: np.array([0.01, 0.0, 0.0]),
        {"alpha": (0.05, 5.0), "beta": (0.05, 5.0), "z0": (0.1, 10.0)},
    ),
    "fet": ModelSpec(
        "fet",
        {**{f.name: f.default for f in fields(FetParams) if f.name != "topology"},
         "topology": 0},
        _fet_build,
        lambda p: np.array([0.01, 0.0, 0.0, 0.0]),
        {"z0": (0.1, 10.0), "q_s1": (1.0, 1000.0), "q_p1": (1.0, 1000.0), "k_n": (0.1, 50.0)},
    ),
    "counterexample": ModelSpec(
        "counterexample",
        {"mu": 0.5, "kappa": 0.3},
        lambda p: counterexample_field(p["mu"], p["kappa"]),
        lambda p: np.array([1.5, 0.0]),
        {"mu": (1e-3, 10.0)},
    ),
}


def get_model(name: str) -> ModelSpec:
    try:
        return MODELS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def make_field(name: str, **overrides) -> VectorField:
    """Build a preset field with parameter overrides, e.g. ``make_field("tcr", alpha=0.5)``."""
    return get_model(name).field(overrides)
