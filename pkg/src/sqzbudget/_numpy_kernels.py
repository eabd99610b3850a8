"""Vectorized numpy kernels. Same signatures as ``_numba_kernels``."""

from __future__ import annotations

import numpy as np

C_LIGHT = 299792458.0
INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def observed_squeezed(xs, theta, loss0, loss1, transmittance, length, eff, wfreq, n_c):
    """Observed squeezed-quadrature variance (linear) at each normalized pump ``xs``.

    All parameters broadcast against each other.
    """
    xs = np.asarray(xs, dtype=np.float64)
    loss = loss0 + loss1 * xs
    tl = transmittance + loss
    e = eff * transmittance / tl
    om = wfreq * length / (C_LIGHT * tl)
    d = 4.0 * om * om
    lo = (1.0 - xs) ** 2 + d
    rm = (lo + 4.0 * xs * (1.0 - e)) / ((1.0 + xs) ** 2 + d)
    rp = 1.0 + e * 4.0 * xs / lo
    c = np.cos(theta)
    s = np.sin(theta)
    v = rm * (c * c) + rp * (s * s)
    return v * (1.0 - n_c) + n_c


def optimize_cells(theta, loss0, loss1, transmittance, length, eff, wfreq, n_c, n_coarse, x_max, tol):
    """Minimize :func:`observed_squeezed` over x for every cell at once.

    Cells are given by the 1-D arrays ``theta``, ``loss0``, ``loss1``. A coarse
    uniform scan over ``[0, x_max]`` picks a bracket around the best sample,
    then golden-section search narrows it below ``tol``.

    Returns ``(x_opt, best, lo, hi, boundary, evals)``; for boundary cells
    ``x_opt`` is ``x_max`` and ``best`` is the value there.
    """
    theta = np.asarray(theta, dtype=np.float64)
    loss0 = np.asarray(loss0, dtype=np.float64)
    loss1 = np.asarray(loss1, dtype=np.float64)
    n = theta.shape[0]

    def f(x, idx=None):
        if idx is None:
            return observed_squeezed(x, theta, loss0, loss1, transmittance, length, eff, wfreq, n_c)
        return observed_squeezed(
            x, theta[idx], loss0[idx], loss1[idx], transmittance, length, eff, wfreq, n_c
        )

    grid = np.linspace(0.0, x_max, n_coarse)
    coarse = observed_squeezed(
        grid[None, :], theta[:, None], loss0[:, None], loss1[:, None],
        transmittance, length, eff, wfreq, n_c,
    )
    i = np.argmin(coarse, axis=1)
    lo = grid[np.maximum(i - 1, 0)]
    hi = grid[np.minimum(i + 1, n_coarse - 1)]
    at_end = i == n_coarse - 1

    a = lo.copy()
    b = hi.copy()
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = f(c)
    fd = f(d)
    evals = np.full(n, n_coarse + 2, dtype=np.int64)
    active = (b - a) > tol
    while np.any(active):
        idx = np.nonzero(active)[0]
        left = fc[idx] < fd[idx]
        li = idx[left]
        ri = idx[~left]
        # minimum in [a, d]
        b[li] = d[li]
        d[li] = c[li]
        fd[li] = fc[li]
        c[li] = b[li] - INV_PHI * (b[li] - a[li])
        fc[li] = f(c[li], li)
        # minimum in [c, b]
        a[ri] = c[ri]
        c[ri] = d[ri]
        fc[ri] = fd[ri]
        d[ri] = a[ri] + INV_PHI * (b[ri] - a[ri])
        fd[ri] = f(d[ri], ri)
        evals[idx] += 1
        active = (b - a) > tol

    x_opt = 0.5 * (a + b)
    boundary = at_end & (b >= x_max)
    x_opt = np.where(boundary, x_max, x_opt)
    best = f(x_opt)
    evals += 1
    return x_opt, best, lo, hi, boundary, evals


def sin2_moments(theta):
    """Sample mean and sum of squared deviations of ``sin(theta)**2``."""
    s = np.sin(np.asarray(theta, dtype=np.float64))
    s2 = s * s
    mean = s2.sum() / s2.shape[0]
    dev = s2 - mean
    return mean, float(np.dot(dev, dev))
