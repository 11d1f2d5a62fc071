"""Pure-Python Dormand-Prince 5(4) integrator.

Mirrors ``floqsym._kernels.dopri5`` step for step. Used when the compiled
extension is unavailable, when ``FLOQSYM_PURE`` is set, and for vector
fields that have no compiled kernel.
"""
from __future__ import annotations

import math

import numpy as np

ST_OK = 0
ST_UNDERFLOW = 1
ST_NONFINITE = 2
ST_MAXSTEPS = 3
ST_DOMAIN = 4

A21 = 0.2
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0,
)
A71, A73, A74, A75, A76 = (
    35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0,
)
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
)
D1, D3, D4, D5, D6, D7 = (
    -12715105075.0 / 11282082432.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
)
UROUND = 2.220446049250313e-16


class _DomainFault(Exception):
    pass


def _augment(rhs, jac, n):
    def f(y):
        x = y[:n]
        fx = rhs(x)
        J = jac(x)
        phi = y[n:].reshape(n, n)
        return np.concatenate([fx, (J @ phi).ravel()])

    return f


def dopri5(rhs, jac, y0, t0, t1, rtol, atol, variational=False, max_steps=1_000_000,
           h0=0.0, dense=True):
    """Integrate ``y' = rhs(y)``; same return convention as the compiled kernel."""
    y0 = np.asarray(y0, dtype=float)
    nx = y0.size
    if variational:
        f = _augment(rhs, jac, nx)
        y = np.concatenate([y0, np.eye(nx).ravel()])
    else:
        f = rhs
        y = y0.copy()
    N = y.size

    def call(v):
        try:
            return np.asarray(f(v), dtype=float)
        except (ValueError, ZeroDivisionError, FloatingPointError) as exc:
            raise _DomainFault(str(exc)) from exc

    times = [t0]
    states = [y.copy()]
    coeffs = []
    nfev = 0
    dirn = 1.0 if t1 - t0 >= 0.0 else -1.0
    hmax = abs(t1 - t0)
    if hmax == 0.0:
        return _pack(ST_OK, times, states, coeffs, N, dense, nfev)

    status = ST_OK
    try:
        k1 = call(y)
        nfev += 1
        if h0 > 0.0:
            h = h0
        else:
            sk = atol + rtol * np.abs(y)
            dnf = float(np.sum((k1 / sk) ** 2))
            dny = float(np.sum((y / sk) ** 2))
            if dnf <= 1e-10 or dny <= 1e-10:
                h = 1.0e-6
            else:
                h = math.sqrt(dny / dnf) * 0.01
            h = min(h, hmax)
            k2 = call(y + dirn * h * k1)
            nfev += 1
            der2 = math.sqrt(float(np.sum(((k2 - k1) / sk) ** 2)) / N) / h
            der12 = max(der2, math.sqrt(dnf / N))
            if der12 <= 1e-15:
                h1 = max(1.0e-6, abs(h) * 1e-3)
            else:
                h1 = (0.01 / der12) ** 0.2
            h = min(100.0 * h, h1, hmax)
        h = dirn * h
    except _DomainFault:
        return _pack(ST_DOMAIN, times, states, coeffs, N, dense, nfev)

    t = t0
    facold = 1e-4
    expo1 = 0.2 - 0.04 * 0.75
    facc1, facc2, safe, beta = 5.0, 0.1, 0.9, 0.04
    last = False
    reject = False
    naccept = 0
    nstep = 0
    with np.errstate(all="ignore"):
        while True:
            if nstep >= max_steps:
                status = ST_MAXSTEPS
                break
            if 0.1 * abs(h) <= abs(t) * UROUND:
                status = ST_UNDERFLOW
                break
            if (t + 1.01 * h - t1) * dirn > 0.0:
                h = t1 - t
                last = True
            nstep += 1
            try:
                k2 = call(y + h * A21 * k1)
                k3 = call(y + h * (A31 * k1 + A32 * k2))
                k4 = call(y + h * (A41 * k1 + A42 * k2 + A43 * k3))
                k5 = call(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
                k6 = call(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
                y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
                k7 = call(y1)
            except _DomainFault:
                status = ST_DOMAIN
                break
            nfev += 6
            ee = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            sk = atol + rtol * np.maximum(np.abs(y), np.abs(y1))
            err = math.sqrt(float(np.sum((ee / sk) ** 2)) / N)
            if not math.isfinite(err):
                h = h * 0.1
                last = False
                reject = True
                continue
            fac11 = err ** expo1
            fac = fac11 / facold ** beta
            fac = min(facc1, max(facc2, fac / safe))
            hnew = h / fac
            if err <= 1.0:
                facold = max(err, 1e-4)
                naccept += 1
                if dense:
                    ydiff = y1 - y
                    bspl = h * k1 - ydiff
                    coeffs.append(np.stack([
                        y,
                        ydiff,
                        bspl,
                        ydiff - h * k7 - bspl,
                        h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
                    ]))
                k1 = k7
                y = y1
                t = t1 if last else t + h
                times.append(t)
                states.append(y.copy())
                if last:
                    break
                if abs(hnew) > hmax:
                    hnew = dirn * hmax
                if reject and abs(hnew) > abs(h):
                    hnew = h
                reject = False
            else:
                hnew = h / min(facc1, fac11 / safe)
                reject = True
                last = False
            h = hnew
    return _pack(status, times, states, coeffs, N, dense, nfev)


def _pack(status, times, states, coeffs, N, dense, nfev):
    t = np.asarray(times, dtype=float)
    s = np.asarray(states, dtype=float).reshape(len(times), N)
    if dense and coeffs:
        c = np.asarray(coeffs, dtype=float)
    else:
        c = np.empty((0, 5, N))
    return status, t, s, c, nfev
