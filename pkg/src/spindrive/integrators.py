"""Embedded Dormand-Prince 5(4) drivers, compiled with numba.

Two near-identical drivers: a complex one for state evolution in the
flip/phase representation and a real one for moment systems in compiled
term-array form.  The pair is hand-rolled rather than routed through a
generic ODE front end so the per-step cost stays at the level of the raw
right-hand side; the runtime scaling comparisons depend on that.

Step control follows the usual embedded-pair recipe: scale = atol +
rtol * max(|y|, |y_new|), RMS error norm, step factor clip(0.9 *
err^(-1/5), 0.2, 5).  Sample times are hit by clipping the step, with the
proposed step width kept separately so clipping does not throttle the
controller.

Status codes: 0 ok, 1 step underflow, 2 max_steps exhausted, 3 moment
magnitude left the trust band (moment driver only).  The drive is sampled
on a uniform grid and interpolated linearly, constant beyond either end.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2
STATUS_BREAKDOWN = 3

_EPS = 2.220446049250313e-16

# Dormand-Prince coefficients
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (
    9017 / 3168,
    -355 / 33,
    46732 / 5247,
    49 / 176,
    -5103 / 18656,
)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


@njit(cache=True)
def drive_at(t, t0, dt, vals):
    x = (t - t0) / dt
    n = vals.shape[0]
    if x <= 0.0:
        return vals[0]
    if x >= n - 1:
        return vals[n - 1]
    k = int(x)
    f = x - k
    return vals[k] * (1.0 - f) + vals[k + 1] * f


@njit(cache=True)
def _hpsi(t, y, out, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases):
    dim = y.shape[0]
    d = drive_at(t, t0d, dtd, dvals)
    for i in range(dim):
        out[i] = (d * ddiag[i] + sdiag[i]) * y[i]
    for k in range(dflips.shape[0]):
        mask = dflips[k]
        for i in range(dim):
            out[i] += d * dphases[k, i] * y[i ^ mask]
    for k in range(sflips.shape[0]):
        mask = sflips[k]
        for i in range(dim):
            out[i] += sphases[k, i] * y[i ^ mask]
    for i in range(dim):
        out[i] *= -1j


@njit(cache=True)
def integrate_schrodinger(
    psi0,
    times,
    t0d,
    dtd,
    dvals,
    ddiag,
    dflips,
    dphases,
    sdiag,
    sflips,
    sphases,
    atol,
    rtol,
    max_steps,
):
    dim = psi0.shape[0]
    n_t = times.shape[0]
    states = np.zeros((n_t, dim), np.complex128)
    y = psi0.copy()
    states[0] = y
    k1 = np.empty(dim, np.complex128)
    k2 = np.empty(dim, np.complex128)
    k3 = np.empty(dim, np.complex128)
    k4 = np.empty(dim, np.complex128)
    k5 = np.empty(dim, np.complex128)
    k6 = np.empty(dim, np.complex128)
    k7 = np.empty(dim, np.complex128)
    ytmp = np.empty(dim, np.complex128)

    t = times[0]
    _hpsi(t, y, k1, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases)
    nfev = 1

    # initial step size, same construction scipy uses
    d0 = 0.0
    d1 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(k1[i]) / sc) ** 2
    d0 = math.sqrt(d0 / dim)
    d1 = math.sqrt(d1 / dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(dim):
        ytmp[i] = y[i] + h0 * k1[i]
    _hpsi(t + h0, ytmp, k2, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases)
    nfev += 1
    d2 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d2 += (abs(k2[i] - k1[i]) / sc) ** 2
    d2 = math.sqrt(d2 / dim) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h_abs = min(100.0 * h0, h1)
    span = times[n_t - 1] - times[0]
    if h_abs > span:
        h_abs = span

    n_steps = 0
    for j in range(1, n_t):
        t_end = times[j]
        while t < t_end:
            if n_steps >= max_steps:
                return states, STATUS_MAX_STEPS, t, n_steps, nfev, j
            h = h_abs
            clipped = False
            if t + h >= t_end:
                h = t_end - t
                clipped = True
            if h < 10.0 * _EPS * max(abs(t), 1.0):
                return states, STATUS_UNDERFLOW, t, n_steps, nfev, j

            for i in range(dim):
                ytmp[i] = y[i] + h * (_A21 * k1[i])
            _hpsi(t + _C2 * h, ytmp, k2, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases)
            for i in range(dim):
                ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
            _hpsi(t + _C3 * h, ytmp, k3, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases)
            for i in range(dim):
                ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            _hpsi(t + _C4 * h, ytmp, k4, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases)
            for i in range(dim):
                ytmp[i] = y[i] + h * (
                    _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
                )
            _hpsi(t + _C5 * h, ytmp, k5, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases)
            for i in range(dim):
                ytmp[i] = y[i] + h * (
                    _A61 * k1[i]
                    + _A62 * k2[i]
                    + _A63 * k3[i]
                    + _A64 * k4[i]
                    + _A65 * k5[i]
                )
            _hpsi(t + h, ytmp, k6, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases)
            for i in range(dim):
                ytmp[i] = y[i] + h * (
                    _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
                )
            _hpsi(t + h, ytmp, k7, t0d, dtd, dvals, ddiag, dflips, dphases, sdiag, sflips, sphases)
            nfev += 6

            err = 0.0
            for i in range(dim):
                e = h * (
                    _E1 * k1[i]
                    + _E3 * k3[i]
                    + _E4 * k4[i]
                    + _E5 * k5[i]
                    + _E6 * k6[i]
                    + _E7 * k7[i]
                )
                sc = atol + rtol * max(abs(y[i]), abs(ytmp[i]))
                q = abs(e) / sc
                err += q * q
            err = math.sqrt(err / dim)
            n_steps += 1

            if err <= 1.0:
                if err <= 0.0:
                    factor = 5.0
                else:
                    factor = 0.9 * err ** (-0.2)
                    if factor > 5.0:
                        factor = 5.0
                    if factor < 0.2:
                        factor = 0.2
                t = t_end if clipped else t + h
                for i in range(dim):
                    y[i] = ytmp[i]
                    k1[i] = k7[i]
                if clipped:
                    if h * factor > h_abs:
                        h_abs = h * factor
                else:
                    h_abs = h * factor
                if h_abs > span:
                    h_abs = span
            else:
                factor = 0.9 * err ** (-0.2)
                if factor < 0.2:
                    factor = 0.2
                h_abs = h * factor
        states[j] = y
    return states, STATUS_OK, t, n_steps, nfev, n_t


@njit(cache=True)
def _moment_rhs(t, v, out, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3):
    n = v.shape[0]
    d = drive_at(t, t0d, dtd, dvals)
    for i in range(n):
        out[i] = 0.0
        vext[i] = v[i]
    vext[n] = 1.0
    for k in range(out_idx.shape[0]):
        c = coeff[k]
        if dflag[k] != 0:
            c = c * d
        out[out_idx[k]] += c * vext[f1[k]] * vext[f2[k]] * vext[f3[k]]


@njit(cache=True)
def integrate_moments(
    v0,
    times,
    t0d,
    dtd,
    dvals,
    out_idx,
    coeff,
    dflag,
    f1,
    f2,
    f3,
    atol,
    rtol,
    max_steps,
    band,
):
    n = v0.shape[0]
    n_t = times.shape[0]
    states = np.zeros((n_t, n))
    y = v0.copy()
    states[0] = y
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    vext = np.empty(n + 1)

    t = times[0]
    _moment_rhs(t, y, k1, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3)
    nfev = 1

    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(k1[i]) / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(n):
        ytmp[i] = y[i] + h0 * k1[i]
    _moment_rhs(t + h0, ytmp, k2, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3)
    nfev += 1
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d2 += (abs(k2[i] - k1[i]) / sc) ** 2
    d2 = math.sqrt(d2 / n) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h_abs = min(100.0 * h0, h1)
    span = times[n_t - 1] - times[0]
    if h_abs > span:
        h_abs = span

    n_steps = 0
    for j in range(1, n_t):
        t_end = times[j]
        while t < t_end:
            if n_steps >= max_steps:
                return states, STATUS_MAX_STEPS, t, n_steps, nfev, j
            h = h_abs
            clipped = False
            if t + h >= t_end:
                h = t_end - t
                clipped = True
            if h < 10.0 * _EPS * max(abs(t), 1.0):
                return states, STATUS_UNDERFLOW, t, n_steps, nfev, j

            for i in range(n):
                ytmp[i] = y[i] + h * (_A21 * k1[i])
            _moment_rhs(t + _C2 * h, ytmp, k2, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3)
            for i in range(n):
                ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
            _moment_rhs(t + _C3 * h, ytmp, k3, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3)
            for i in range(n):
                ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            _moment_rhs(t + _C4 * h, ytmp, k4, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3)
            for i in range(n):
                ytmp[i] = y[i] + h * (
                    _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
                )
            _moment_rhs(t + _C5 * h, ytmp, k5, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3)
            for i in range(n):
                ytmp[i] = y[i] + h * (
                    _A61 * k1[i]
                    + _A62 * k2[i]
                    + _A63 * k3[i]
                    + _A64 * k4[i]
                    + _A65 * k5[i]
                )
            _moment_rhs(t + h, ytmp, k6, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3)
            for i in range(n):
                ytmp[i] = y[i] + h * (
                    _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
                )
            _moment_rhs(t + h, ytmp, k7, vext, t0d, dtd, dvals, out_idx, coeff, dflag, f1, f2, f3)
            nfev += 6

            err = 0.0
            for i in range(n):
                e = h * (
                    _E1 * k1[i]
                    + _E3 * k3[i]
                    + _E4 * k4[i]
                    + _E5 * k5[i]
                    + _E6 * k6[i]
                    + _E7 * k7[i]
                )
                sc = atol + rtol * max(abs(y[i]), abs(ytmp[i]))
                q = abs(e) / sc
                err += q * q
            err = math.sqrt(err / n)
            n_steps += 1

            if err <= 1.0:
                if err <= 0.0:
                    factor = 5.0
                else:
                    factor = 0.9 * err ** (-0.2)
                    if factor > 5.0:
                        factor = 5.0
                    if factor < 0.2:
                        factor = 0.2
                t = t_end if clipped else t + h
                for i in range(n):
                    y[i] = ytmp[i]
                    k1[i] = k7[i]
                if clipped:
                    if h * factor > h_abs:
                        h_abs = h * factor
                else:
                    h_abs = h * factor
                if h_abs > span:
                    h_abs = span
                out_of_band = False
                for i in range(n):
                    if abs(y[i]) > band:
                        out_of_band = True
                        break
                if out_of_band:
                    return states, STATUS_BREAKDOWN, t, n_steps, nfev, j
            else:
                factor = 0.9 * err ** (-0.2)
                if factor < 0.2:
                    factor = 0.2
                h_abs = h * factor
        states[j] = y
    return states, STATUS_OK, t, n_steps, nfev, n_t
