"""Pure numpy versions of the compiled kernels (same signatures and results)."""

from __future__ import annotations

import math

import numpy as np
from scipy import special


def weighted_map_error(q, t, eta):
    """Row-wise ``sum_l q[i, l] * miss_l`` for hypotheses ``N(l t, eta)``.

    For each row the weighted log-likelihoods are lines in the observation
    ``z`` (after dropping the common quadratic term); the MAP decision
    region of hypothesis ``l`` is the interval where its line is the upper
    envelope, and ``miss_l`` is the Gaussian mass outside that interval.
    """
    q = np.ascontiguousarray(q, dtype=float)
    n, m = q.shape
    ells = np.arange(m, dtype=float)
    pos = q > 0
    with np.errstate(divide="ignore"):
        a = np.where(pos, np.log(np.where(pos, q, 1.0)), -np.inf) - 0.5 * ells**2 * t * t / eta
    s2 = math.sqrt(2.0 * eta)
    out = np.zeros(n)
    for l in range(m):
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        for k in range(m):
            if k == l:
                continue
            with np.errstate(invalid="ignore"):
                z = (a[:, k] - a[:, l]) * eta / ((l - k) * t)
            z = np.where(pos[:, k], z, -np.inf if k < l else np.inf)
            if k < l:
                lo = np.maximum(lo, z)
            else:
                hi = np.minimum(hi, z)
        miss = 0.5 * special.erfc((l * t - lo) / s2) + 0.5 * special.erfc((hi - l * t) / s2)
        miss = np.where(lo >= hi, 1.0, miss)
        out += np.where(pos[:, l], q[:, l] * miss, 0.0)
    return out


def posterior_moments(y, x, logw, lo_idx, hi_idx, eta):
    """Log normaliser, mean and variance of ``w(x) phi_eta(y - x)`` per ``y``."""
    y = np.asarray(y, float)
    x = np.asarray(x, float)
    logw = np.asarray(logw, float)
    ny = y.size
    logz = np.full(ny, -np.inf)
    mean = np.zeros(ny)
    var = np.zeros(ny)
    cols = np.arange(x.size)
    step = max(1, 4_000_000 // max(1, x.size))
    for s in range(0, ny, step):
        sl = slice(s, s + step)
        inside = (cols[None, :] >= lo_idx[sl, None]) & (cols[None, :] < hi_idx[sl, None])
        e = np.where(inside, logw[None, :] - 0.5 * (y[sl, None] - x[None, :]) ** 2 / eta, -np.inf)
        mx = e.max(axis=1)
        ok = np.isfinite(mx)
        w = np.exp(e - np.where(ok, mx, 0.0)[:, None])
        s0 = w.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            mu = (w * x).sum(axis=1) / s0
            v = (w * (x[None, :] - mu[:, None]) ** 2).sum(axis=1) / s0
            lz = mx + np.log(s0)
        good = ok & (s0 > 0)
        logz[sl] = np.where(good, lz, -np.inf)
        mean[sl] = np.where(good, mu, 0.0)
        var[sl] = np.where(good, v, 0.0)
    return logz, mean, var
