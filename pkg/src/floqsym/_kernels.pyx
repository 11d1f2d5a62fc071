# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) integrator with built-in oscillator models.

The step controller, error norm and dense-output coefficients are identical
to :mod:`floqsym._fallback`; only the right-hand side evaluation differs
(C here, Python callables there).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, atan, pow, isfinite, M_PI
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

# model identifiers, kept in sync with floqsym.models
DEF M_PNF = 1
DEF M_VDP = 2
DEF M_TCR = 3
DEF M_FET = 4
DEF M_CE = 5

DEF ST_OK = 0
DEF ST_UNDERFLOW = 1
DEF ST_NONFINITE = 2
DEF ST_MAXSTEPS = 3
DEF ST_DOMAIN = 4

# Dormand-Prince tableau
DEF C2 = 0.2
DEF C3 = 0.3
DEF C4 = 0.8
DEF C5 = 8.0 / 9.0
DEF A21 = 0.2
DEF A31 = 3.0 / 40.0
DEF A32 = 9.0 / 40.0
DEF A41 = 44.0 / 45.0
DEF A42 = -56.0 / 15.0
DEF A43 = 32.0 / 9.0
DEF A51 = 19372.0 / 6561.0
DEF A52 = -25360.0 / 2187.0
DEF A53 = 64448.0 / 6561.0
DEF A54 = -212.0 / 729.0
DEF A61 = 9017.0 / 3168.0
DEF A62 = -355.0 / 33.0
DEF A63 = 46732.0 / 5247.0
DEF A64 = 49.0 / 176.0
DEF A65 = -5103.0 / 18656.0
DEF A71 = 35.0 / 384.0
DEF A73 = 500.0 / 1113.0
DEF A74 = 125.0 / 192.0
DEF A75 = -2187.0 / 6784.0
DEF A76 = 11.0 / 84.0
DEF E1 = 71.0 / 57600.0
DEF E3 = -71.0 / 16695.0
DEF E4 = 71.0 / 1920.0
DEF E5 = -17253.0 / 339200.0
DEF E6 = 22.0 / 525.0
DEF E7 = -1.0 / 40.0
DEF D1 = -12715105075.0 / 11282082432.0
DEF D3 = 87487479700.0 / 32700410799.0
DEF D4 = -10690763975.0 / 1880347072.0
DEF D5 = 701980252875.0 / 199316789632.0
DEF D6 = -1453857185.0 / 822651844.0
DEF D7 = 69997945.0 / 29380423.0

DEF UROUND = 2.220446049250313e-16


cdef int rhs(int model, const double* p, int n, const double* x, double* out) noexcept nogil:
    cdef int m, k, i, off
    cdef double r, g, a, b, an, bn, z0, s, f, gm, ib, d, mu, kap
    if model == M_PNF:
        m = <int>p[0]
        k = <int>p[1]
        mu = p[2]
        r = sqrt(x[0] * x[0] + x[1] * x[1])
        if r == 0.0:
            return ST_DOMAIN
        out[0] = mu * (1.0 - r) * x[0] - x[1]
        out[1] = mu * (1.0 - r) * x[1] + x[0]
        for i in range(m):
            out[2 + i] = -p[3 + i] * x[2 + i]
        off = 2 + m
        for i in range(k):
            s = p[3 + m + i]
            g = p[3 + m + k + i]
            out[off + 2 * i] = -s * x[off + 2 * i] + g * x[off + 2 * i + 1]
            out[off + 2 * i + 1] = -s * x[off + 2 * i + 1] - g * x[off + 2 * i]
    elif model == M_VDP:
        out[0] = p[0] * x[1]
        out[1] = -x[0] + p[1] * (1.0 - x[0] * x[0]) * x[1]
    elif model == M_TCR:
        a = p[0]
        b = p[1]
        z0 = p[2]
        an = a / (a * a + b * b)
        bn = b / (a * a + b * b)
        s = a * x[0] - b * x[2]
        f = p[8] - (p[9] * (z0 * s) * (z0 * s) + p[10] * (x[1] / z0) * (x[1] / z0))
        out[0] = (-x[0] / p[5] - an * x[1] / z0 + an * z0 * s * f) / p[3]
        out[1] = -x[1] / p[7] + z0 * s + (x[1] / z0) * f
        out[2] = (-x[2] / p[6] + bn * x[1] / z0 + bn * z0 * s * f) / p[4]
    elif model == M_FET:
        z0 = p[0]
        ib = p[9]
        gm = sqrt(p[10] * ib)
        d = ib * (2.0 / M_PI) * atan((M_PI / 2.0) * (gm / ib) * z0 * (x[0] - x[2]))
        out[0] = (-p[11] * x[0] / p[5] - x[1] / z0 + d) / p[1]
        out[1] = (z0 * x[0] - p[12] * x[1] / p[7]) / p[3]
        out[2] = (-p[11] * x[2] / p[6] - x[3] / z0 - d) / p[2]
        out[3] = (z0 * x[2] - p[12] * x[3] / p[8]) / p[4]
    elif model == M_CE:
        mu = p[0]
        kap = p[1]
        r = sqrt(x[0] * x[0] + x[1] * x[1])
        if r == 0.0:
            return ST_DOMAIN
        g = 1.0 + kap * (r - 1.0)
        out[0] = mu * (1.0 - r) * x[0] - g * x[1]
        out[1] = mu * (1.0 - r) * x[1] + g * x[0]
    else:
        return ST_DOMAIN
    return ST_OK


cdef int jac(int model, const double* p, int n, const double* x, double* J) noexcept nogil:
    cdef int m, k, i, off
    cdef double r, g, a, b, an, bn, z0, s, f, fy, fv, fw, gm, ib, dp, u, mu, kap, sg, nu
    for i in range(n * n):
        J[i] = 0.0
    if model == M_PNF:
        m = <int>p[0]
        k = <int>p[1]
        mu = p[2]
        r = sqrt(x[0] * x[0] + x[1] * x[1])
        if r == 0.0:
            return ST_DOMAIN
        J[0] = mu * (1.0 - r) - mu * x[0] * x[0] / r
        J[1] = -mu * x[0] * x[1] / r - 1.0
        J[n] = -mu * x[0] * x[1] / r + 1.0
        J[n + 1] = mu * (1.0 - r) - mu * x[1] * x[1] / r
        for i in range(m):
            J[(2 + i) * n + 2 + i] = -p[3 + i]
        off = 2 + m
        for i in range(k):
            sg = p[3 + m + i]
            nu = p[3 + m + k + i]
            J[(off + 2 * i) * n + off + 2 * i] = -sg
            J[(off + 2 * i) * n + off + 2 * i + 1] = nu
            J[(off + 2 * i + 1) * n + off + 2 * i] = -nu
            J[(off + 2 * i + 1) * n + off + 2 * i + 1] = -sg
    elif model == M_VDP:
        J[1] = p[0]
        J[2] = -1.0 - 2.0 * p[1] * x[0] * x[1]
        J[3] = p[1] * (1.0 - x[0] * x[0])
    elif model == M_TCR:
        a = p[0]
        b = p[1]
        z0 = p[2]
        an = a / (a * a + b * b)
        bn = b / (a * a + b * b)
        s = a * x[0] - b * x[2]
        f = p[8] - (p[9] * (z0 * s) * (z0 * s) + p[10] * (x[1] / z0) * (x[1] / z0))
        fy = -2.0 * p[9] * z0 * z0 * s * a
        fw = 2.0 * p[9] * z0 * z0 * s * b
        fv = -2.0 * p[10] * x[1] / (z0 * z0)
        J[0] = (-1.0 / p[5] + an * z0 * (a * f + s * fy)) / p[3]
        J[1] = (-an / z0 + an * z0 * s * fv) / p[3]
        J[2] = (an * z0 * (-b * f + s * fw)) / p[3]
        J[3] = z0 * a + (x[1] / z0) * fy
        J[4] = -1.0 / p[7] + f / z0 + (x[1] / z0) * fv
        J[5] = -z0 * b + (x[1] / z0) * fw
        J[6] = (bn * z0 * (a * f + s * fy)) / p[4]
        J[7] = (bn / z0 + bn * z0 * s * fv) / p[4]
        J[8] = (-1.0 / p[6] + bn * z0 * (-b * f + s * fw)) / p[4]
    elif model == M_FET:
        z0 = p[0]
        ib = p[9]
        gm = sqrt(p[10] * ib)
        u = (M_PI / 2.0) * (gm / ib) * z0 * (x[0] - x[2])
        dp = gm * z0 / (1.0 + u * u)
        J[0] = (-p[11] / p[5] + dp) / p[1]
        J[1] = (-1.0 / z0) / p[1]
        J[2] = -dp / p[1]
        J[4] = z0 / p[3]
        J[5] = -p[12] / (p[7] * p[3])
        J[8] = -dp / p[2]
        J[10] = (-p[11] / p[6] + dp) / p[2]
        J[11] = (-1.0 / z0) / p[2]
        J[14] = z0 / p[4]
        J[15] = -p[12] / (p[8] * p[4])
    elif model == M_CE:
        mu = p[0]
        kap = p[1]
        r = sqrt(x[0] * x[0] + x[1] * x[1])
        if r == 0.0:
            return ST_DOMAIN
        g = 1.0 + kap * (r - 1.0)
        J[0] = mu * (1.0 - r) - mu * x[0] * x[0] / r - kap * x[0] * x[1] / r
        J[1] = -mu * x[0] * x[1] / r - g - kap * x[1] * x[1] / r
        J[2] = -mu * x[0] * x[1] / r + g + kap * x[0] * x[0] / r
        J[3] = mu * (1.0 - r) - mu * x[1] * x[1] / r + kap * x[0] * x[1] / r
    else:
        return ST_DOMAIN
    return ST_OK


cdef struct System:
    int model
    const double* p
    int n
    int var
    double* J


cdef int sys_rhs(System* S, const double* x, double* out) noexcept nogil:
    cdef int st, i, j, l, n = S.n
    cdef double acc
    st = rhs(S.model, S.p, n, x, out)
    if st != ST_OK or not S.var:
        return st
    st = jac(S.model, S.p, n, x, S.J)
    if st != ST_OK:
        return st
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for l in range(n):
                acc = acc + S.J[i * n + l] * x[n + l * n + j]
            out[n + i * n + j] = acc
    return ST_OK


def eval_rhs(int model, const double[::1] params, const double[::1] x):
    """Evaluate a built-in model's vector field (testing hook)."""
    cdef int n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    if rhs(model, &params[0], n, &x[0], &o[0]) != ST_OK:
        raise ValueError("vector field undefined at this state")
    return out


def eval_jac(int model, const double[::1] params, const double[::1] x):
    """Evaluate a built-in model's analytic Jacobian (testing hook)."""
    cdef int n = x.shape[0]
    out = np.empty((n, n))
    cdef double[:, ::1] o = out
    if jac(model, &params[0], n, &x[0], &o[0, 0]) != ST_OK:
        raise ValueError("Jacobian undefined at this state")
    return out


cdef inline double _sign(double v) noexcept nogil:
    return 1.0 if v >= 0.0 else -1.0


def dopri5(int model, const double[::1] params, const double[::1] y0, double t0, double t1,
           double rtol, double atol, bint variational=False, long max_steps=1000000,
           double h0=0.0, bint dense=True):
    """Integrate a built-in model from ``t0`` to ``t1``.

    Returns ``(status, times, states, coeffs, nfev)`` where ``coeffs`` has
    shape ``(steps, 5, N)`` (empty when ``dense`` is false) and ``status``
    is 0 on success. On failure the arrays hold the accepted prefix.
    """
    cdef int nx = y0.shape[0]
    cdef int N, i, st
    if variational:
        # y0 holds the state only; the tangent block starts at identity
        N = nx + nx * nx
    else:
        N = nx
    cdef double* wk = <double*>malloc(sizeof(double) * N * 10 + sizeof(double) * nx * nx)
    if wk == NULL:
        raise MemoryError()
    cdef double* y = wk
    cdef double* y1 = wk + N
    cdef double* k1 = wk + 2 * N
    cdef double* k2 = wk + 3 * N
    cdef double* k3 = wk + 4 * N
    cdef double* k4 = wk + 5 * N
    cdef double* k5 = wk + 6 * N
    cdef double* k6 = wk + 7 * N
    cdef double* ysti = wk + 8 * N
    cdef double* ee = wk + 9 * N
    cdef System S
    S.model = model
    S.p = &params[0]
    S.n = nx
    S.var = 1 if variational else 0
    S.J = wk + 10 * N

    for i in range(nx):
        y[i] = y0[i]
    if variational:
        for i in range(nx * nx):
            y[nx + i] = 0.0
        for i in range(nx):
            y[nx + i * nx + i] = 1.0

    cdef long cap = 256
    cdef long nsteps = 0
    cdef double* tbuf = <double*>malloc(sizeof(double) * cap)
    cdef double* ybuf = <double*>malloc(sizeof(double) * cap * N)
    cdef double* cbuf = NULL
    if dense:
        cbuf = <double*>malloc(sizeof(double) * cap * 5 * N)
    tbuf[0] = t0
    for i in range(N):
        ybuf[i] = y[i]

    cdef double dirn = _sign(t1 - t0)
    cdef double hmax = fabs(t1 - t0)
    cdef double t = t0, h, hnew, err, sk, fac, fac11, facold = 1e-4
    cdef double expo1 = 0.2 - 0.04 * 0.75
    cdef double facc1 = 5.0, facc2 = 0.1, safe = 0.9, beta = 0.04
    cdef double dnf, dny, der2, der12, h1, ydiff, bspl
    cdef bint last = False, reject = False, ok
    cdef long nfev = 0, naccept = 0, nreject = 0, nstep = 0
    cdef long base
    cdef int status = ST_OK

    if hmax == 0.0:
        free(wk)
        result = _pack(tbuf, ybuf, cbuf, 0, N, dense)
        free(tbuf); free(ybuf)
        if cbuf != NULL:
            free(cbuf)
        return (ST_OK,) + result + (0,)

    with nogil:
        st = sys_rhs(&S, y, k1)
        nfev += 1
        if st != ST_OK:
            status = st
        if status == ST_OK:
            # initial step (Hairer's HINIT)
            if h0 > 0.0:
                h = h0
            else:
                dnf = 0.0
                dny = 0.0
                for i in range(N):
                    sk = atol + rtol * fabs(y[i])
                    dnf = dnf + (k1[i] / sk) * (k1[i] / sk)
                    dny = dny + (y[i] / sk) * (y[i] / sk)
                if dnf <= 1e-10 or dny <= 1e-10:
                    h = 1.0e-6
                else:
                    h = sqrt(dny / dnf) * 0.01
                if h > hmax:
                    h = hmax
                for i in range(N):
                    ysti[i] = y[i] + dirn * h * k1[i]
                st = sys_rhs(&S, ysti, k2)
                nfev += 1
                if st != ST_OK:
                    status = st
                der2 = 0.0
                for i in range(N):
                    sk = atol + rtol * fabs(y[i])
                    der2 = der2 + ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk)
                der2 = sqrt(der2 / N) / h
                der12 = der2
                if sqrt(dnf / N) > der12:
                    der12 = sqrt(dnf / N)
                if der12 <= 1e-15:
                    h1 = 1.0e-6
                    if fabs(h) * 1e-3 > h1:
                        h1 = fabs(h) * 1e-3
                else:
                    h1 = pow(0.01 / der12, 0.2)
                if 100.0 * h < h1:
                    h1 = 100.0 * h
                if hmax < h1:
                    h1 = hmax
                h = h1
            h = dirn * h

        while status == ST_OK:
            if nstep >= max_steps:
                status = ST_MAXSTEPS
                break
            if 0.1 * fabs(h) <= fabs(t) * UROUND:
                status = ST_UNDERFLOW
                break
            if (t + 1.01 * h - t1) * dirn > 0.0:
                h = t1 - t
                last = True
            nstep += 1
            ok = True
            for i in range(N):
                ysti[i] = y[i] + h * A21 * k1[i]
            st = sys_rhs(&S, ysti, k2)
            if st == ST_OK:
                for i in range(N):
                    ysti[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
                st = sys_rhs(&S, ysti, k3)
            if st == ST_OK:
                for i in range(N):
                    ysti[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                st = sys_rhs(&S, ysti, k4)
            if st == ST_OK:
                for i in range(N):
                    ysti[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                st = sys_rhs(&S, ysti, k5)
            if st == ST_OK:
                for i in range(N):
                    ysti[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
                st = sys_rhs(&S, ysti, k6)
            if st == ST_OK:
                for i in range(N):
                    y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
                st = sys_rhs(&S, y1, k2)
            nfev += 6
            if st != ST_OK:
                status = st
                break
            err = 0.0
            for i in range(N):
                ee[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k2[i])
                sk = fabs(y[i])
                if fabs(y1[i]) > sk:
                    sk = fabs(y1[i])
                sk = atol + rtol * sk
                err = err + (ee[i] / sk) * (ee[i] / sk)
            err = sqrt(err / N)
            if not isfinite(err):
                # non-finite stage values: shrink hard and retry
                h = h * 0.1
                last = False
                reject = True
                continue
            fac11 = pow(err, expo1)
            fac = fac11 / pow(facold, beta)
            fac = fac / safe
            if fac > facc1:
                fac = facc1
            if fac < facc2:
                fac = facc2
            hnew = h / fac
            if err <= 1.0:
                facold = err if err > 1e-4 else 1e-4
                naccept += 1
                if nsteps + 1 >= cap:
                    cap = cap * 2
                    tbuf = <double*>realloc(tbuf, sizeof(double) * cap)
                    ybuf = <double*>realloc(ybuf, sizeof(double) * cap * N)
                    if dense:
                        cbuf = <double*>realloc(cbuf, sizeof(double) * cap * 5 * N)
                if dense:
                    base = nsteps * 5 * N
                    for i in range(N):
                        ydiff = y1[i] - y[i]
                        bspl = h * k1[i] - ydiff
                        cbuf[base + i] = y[i]
                        cbuf[base + N + i] = ydiff
                        cbuf[base + 2 * N + i] = bspl
                        cbuf[base + 3 * N + i] = ydiff - h * k2[i] - bspl
                        cbuf[base + 4 * N + i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i]
                                                      + D5 * k5[i] + D6 * k6[i] + D7 * k2[i])
                for i in range(N):
                    k1[i] = k2[i]
                    y[i] = y1[i]
                if last:
                    t = t1
                else:
                    t = t + h
                nsteps += 1
                tbuf[nsteps] = t
                for i in range(N):
                    ybuf[nsteps * N + i] = y[i]
                if last:
                    break
                if fabs(hnew) > hmax:
                    hnew = dirn * hmax
                if reject and fabs(hnew) > fabs(h):
                    hnew = h
                reject = False
            else:
                fac = fac11 / safe
                if fac > facc1:
                    fac = facc1
                hnew = h / fac
                reject = True
                last = False
                if naccept >= 1:
                    nreject += 1
            h = hnew

    free(wk)
    result = _pack(tbuf, ybuf, cbuf, nsteps, N, dense)
    free(tbuf)
    free(ybuf)
    if cbuf != NULL:
        free(cbuf)
    return (status,) + result + (nfev,)


cdef tuple _pack(double* tbuf, double* ybuf, double* cbuf, long nsteps, int N, bint dense):
    cdef long i
    times = np.empty(nsteps + 1)
    states = np.empty((nsteps + 1, N))
    cdef double[::1] tv = times
    cdef double[:, ::1] sv = states
    for i in range(nsteps + 1):
        tv[i] = tbuf[i]
    for i in range((nsteps + 1) * N):
        sv[i // N, i % N] = ybuf[i]
    if dense:
        coeffs = np.empty((nsteps, 5, N))
        if nsteps > 0:
            flat = coeffs.reshape(-1)
            _copy(flat, cbuf, nsteps * 5 * N)
    else:
        coeffs = np.empty((0, 5, N))
    return times, states, coeffs


cdef void _copy(double[::1] dst, double* src, long count) noexcept:
    cdef long i
    for i in range(count):
        dst[i] = src[i]
