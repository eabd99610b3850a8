"""numba kernels. Same signatures as ``_numpy_kernels``; loops instead of broadcasting."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

C_LIGHT = 299792458.0
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@njit(cache=True)
def _observed_one(x, theta, loss0, loss1, transmittance, length, eff, wfreq, n_c):
    loss = loss0 + loss1 * x
    tl = transmittance + loss
    e = eff * transmittance / tl
    om = wfreq * length / (C_LIGHT * tl)
    d = 4.0 * om * om
    lo = (1.0 - x) ** 2 + d
    rm = (lo + 4.0 * x * (1.0 - e)) / ((1.0 + x) ** 2 + d)
    rp = 1.0 + e * 4.0 * x / lo
    c = math.cos(theta)
    s = math.sin(theta)
    v = rm * (c * c) + rp * (s * s)
    return v * (1.0 - n_c) + n_c


@njit(cache=True)
def _observed_array(xs, theta, loss0, loss1, transmittance, length, eff, wfreq, n_c):
    out = np.empty(xs.shape[0])
    for k in range(xs.shape[0]):
        out[k] = _observed_one(xs[k], theta, loss0, loss1, transmittance, length, eff, wfreq, n_c)
    return out


def observed_squeezed(xs, theta, loss0, loss1, transmittance, length, eff, wfreq, n_c):
    """Observed squeezed-quadrature variance at each x; scalar cell parameters only."""
    xs = np.asarray(xs, dtype=np.float64)
    flat = np.ascontiguousarray(xs.reshape(-1))
    out = _observed_array(
        flat, float(theta), float(loss0), float(loss1), float(transmittance),
        float(length), float(eff), float(wfreq), float(n_c),
    )
    return out.reshape(xs.shape)


@njit(cache=True)
def _optimize_cells(theta, loss0, loss1, transmittance, length, eff, wfreq, n_c, n_coarse, x_max, tol,
                    x_opt, best, lo, hi, boundary, evals):
    step = x_max / (n_coarse - 1)
    for k in range(theta.shape[0]):
        th = theta[k]
        l0 = loss0[k]
        l1 = loss1[k]
        ibest = 0
        fbest = np.inf
        for j in range(n_coarse):
            xj = x_max if j == n_coarse - 1 else j * step
            v = _observed_one(xj, th, l0, l1, transmittance, length, eff, wfreq, n_c)
            if v < fbest:
                fbest = v
                ibest = j
        jl = max(ibest - 1, 0)
        jh = min(ibest + 1, n_coarse - 1)
        a = x_max if jl == n_coarse - 1 else jl * step
        b = x_max if jh == n_coarse - 1 else jh * step
        lo[k] = a
        hi[k] = b
        c = b - INV_PHI * (b - a)
        d = a + INV_PHI * (b - a)
        fc = _observed_one(c, th, l0, l1, transmittance, length, eff, wfreq, n_c)
        fd = _observed_one(d, th, l0, l1, transmittance, length, eff, wfreq, n_c)
        ne = n_coarse + 2
        while b - a > tol:
            if fc < fd:
                b = d
                d = c
                fd = fc
                c = b - INV_PHI * (b - a)
                fc = _observed_one(c, th, l0, l1, transmittance, length, eff, wfreq, n_c)
            else:
                a = c
                c = d
                fc = fd
                d = a + INV_PHI * (b - a)
                fd = _observed_one(d, th, l0, l1, transmittance, length, eff, wfreq, n_c)
            ne += 1
        xo = 0.5 * (a + b)
        on_edge = ibest == n_coarse - 1 and b >= x_max
        if on_edge:
            xo = x_max
        boundary[k] = on_edge
        x_opt[k] = xo
        best[k] = _observed_one(xo, th, l0, l1, transmittance, length, eff, wfreq, n_c)
        evals[k] = ne + 1


def optimize_cells(theta, loss0, loss1, transmittance, length, eff, wfreq, n_c, n_coarse, x_max, tol):
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    loss0 = np.ascontiguousarray(loss0, dtype=np.float64)
    loss1 = np.ascontiguousarray(loss1, dtype=np.float64)
    n = theta.shape[0]
    x_opt = np.empty(n)
    best = np.empty(n)
    lo = np.empty(n)
    hi = np.empty(n)
    boundary = np.empty(n, dtype=np.bool_)
    evals = np.empty(n, dtype=np.int64)
    _optimize_cells(
        theta, loss0, loss1, float(transmittance), float(length), float(eff), float(wfreq),
        float(n_c), int(n_coarse), float(x_max), float(tol), x_opt, best, lo, hi, boundary, evals,
    )
    return x_opt, best, lo, hi, boundary, evals


@njit(cache=True)
def _sin2_moments(theta):
    n = theta.shape[0]
    total = 0.0
    for k in range(n):
        s = math.sin(theta[k])
        total += s * s
    mean = total / n
    m2 = 0.0
    for k in range(n):
        s = math.sin(theta[k])
        dev = s * s - mean
        m2 += dev * dev
    return mean, m2


def sin2_moments(theta):
    return _sin2_moments(np.ascontiguousarray(theta, dtype=np.float64))
