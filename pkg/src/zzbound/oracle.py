"""Ground-truth MMSE and falsification checks for bound tightness.

The MMSE oracles evaluate ``E[(X - E[X|Y])^2]`` by nested quadrature, by
Monte Carlo, and in closed form for Gaussian priors. The checkers search
finite grids for violations of the conditions under which the plain
Ziv-Zakai bound equals the MMSE; passing means only that no violation was
found on the supplied grids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, special

from . import kernels
from .channel import GaussianChannel
from .errors import OutsideSupportError, PreconditionError
from .prior import ScalarPrior
from .quadrature import QuadratureSpec, panel_rule

TIE_TOL = 1e-9
MONOTONE_TOL = 1e-9
SYMMETRY_TOL = 1e-6
DEFAULT_X_NODES = 257
DEFAULT_Y_NODES = 65
GRID_SIGMAS = 6.0
POSTERIOR_SIGMAS = 40.0


# ---------------------------------------------------------------------------
# posterior
# ---------------------------------------------------------------------------


@dataclass
class PosteriorSlice:
    """Posterior of X given one observation ``y``.

    ``densities`` are values of the normalised continuous part on
    ``x_grid``; ``weights`` are the quadrature weights of those nodes, so
    ``weights @ densities`` is the posterior probability of the
    continuous part.
    """

    y: float
    x_grid: np.ndarray
    densities: np.ndarray
    weights: np.ndarray
    atom_locs: np.ndarray
    atom_posteriors: np.ndarray
    conditional_mean: float

    @property
    def continuous_mass(self) -> float:
        return float(self.weights @ self.densities)

    @property
    def total_mass(self) -> float:
        return self.continuous_mass + float(self.atom_posteriors.sum())

    @property
    def first_moment(self) -> float:
        return float(self.weights @ (self.densities * self.x_grid) + self.atom_posteriors @ self.atom_locs)

    @property
    def variance(self) -> float:
        m = self.conditional_mean
        c = self.weights @ (self.densities * (self.x_grid - m) ** 2)
        return float(c + self.atom_posteriors @ (self.atom_locs - m) ** 2)


def _continuous_nodes(prior: ScalarPrior, eta: float, quad: QuadratureSpec, lo=None, hi=None, refine: int = 0):
    law = prior.continuous
    wlo, whi = quad.x_window if quad.x_window is not None else law.window()
    lo = wlo if lo is None else max(lo, wlo)
    hi = whi if hi is None else min(hi, whi)
    if not hi > lo:
        return np.empty(0), np.empty(0)
    bps = law.breakpoints()
    breaks = np.concatenate([[lo, hi], bps[(bps > lo) & (bps < hi)]])
    width = min(law.scale, math.sqrt(eta)) / 4 / 2**refine
    return panel_rule(breaks, width, quad.gl_order)


def posterior(prior: ScalarPrior, channel: GaussianChannel, y: float, quad: Optional[QuadratureSpec] = None) -> PosteriorSlice:
    """Posterior slice at ``y`` by Bayes' rule in the log domain."""
    quad = quad or QuadratureSpec()
    eta = channel.eta
    y = float(y)
    sd = math.sqrt(eta)
    x = w = np.empty(0)
    logc = np.empty(0)
    if prior.has_continuous:
        x, w = _continuous_nodes(prior, eta, quad, y - POSTERIOR_SIGMAS * sd, y + POSTERIOR_SIGMAS * sd)
        with np.errstate(divide="ignore"):
            logc = prior.log_density(x) - 0.5 * (y - x) ** 2 / eta
    locs = prior.locs
    with np.errstate(divide="ignore"):
        loga = np.log((1 - prior.alpha) * prior.masses) - 0.5 * (y - locs) ** 2 / eta if prior.has_atoms else np.empty(0)
    with np.errstate(divide="ignore"):
        parts = np.concatenate([logc + np.log(np.where(w > 0, w, 1.0)), loga])
    if parts.size == 0 or not np.isfinite(parts.max()) or parts.max() < -700:
        raise OutsideSupportError(f"posterior at y={y} underflows; y is outside the plausible range")
    lz = special.logsumexp(parts)
    dens = np.exp(logc - lz)
    post = np.exp(loga - lz)
    mean = float(w @ (dens * x) + post @ locs)
    return PosteriorSlice(y, x, dens, w, np.asarray(locs, float), post, mean)


def conditional_mean(prior: ScalarPrior, channel: GaussianChannel, y):
    """``E[X | Y = y]`` from the Gaussian moments of the prior."""
    n0, n1, _ = prior.gaussian_moments(np.asarray(y, float), channel.eta)
    with np.errstate(invalid="ignore", divide="ignore"):
        return n1 / n0


# ---------------------------------------------------------------------------
# MMSE oracles
# ---------------------------------------------------------------------------


@dataclass
class MMSEResult:
    value: float
    converged: bool
    nodes: int


def _all_nodes(prior: ScalarPrior, eta: float, quad: QuadratureSpec, refine: int):
    xs, lw = [], []
    if prior.has_continuous:
        x, w = _continuous_nodes(prior, eta, quad, refine=refine)
        with np.errstate(divide="ignore"):
            lw_c = prior.log_density(x) + np.log(w)
        ok = np.isfinite(lw_c)
        xs.append(x[ok])
        lw.append(lw_c[ok])
    if prior.has_atoms:
        xs.append(prior.locs)
        lw.append(np.log((1 - prior.alpha) * prior.masses))
    x = np.concatenate(xs)
    lw = np.concatenate(lw)
    order = np.argsort(x, kind="stable")
    return x[order], lw[order]


def _mmse_once(prior: ScalarPrior, eta: float, quad: QuadratureSpec, refine: int) -> tuple:
    sd = math.sqrt(eta)
    x, lw = _all_nodes(prior, eta, quad, refine)
    k = quad.y_window_sigma
    lo, hi = x.min() - k * sd, x.max() + k * sd
    ywidth = min(sd, prior.scale if prior.has_continuous else sd) / 2 / 2**refine
    y, wy = panel_rule([lo, hi], ywidth, quad.gl_order)
    lo_idx = np.searchsorted(x, y - POSTERIOR_SIGMAS * sd)
    hi_idx = np.searchsorted(x, y + POSTERIOR_SIGMAS * sd)
    logz, _, var = kernels.posterior_moments(y, x, lw, lo_idx, hi_idx, eta)
    fy = np.exp(logz) / math.sqrt(2 * math.pi * eta)
    return float(wy @ (fy * var)), x.size * y.size


def mmse_quadrature_detail(prior: ScalarPrior, channel: GaussianChannel, quad: Optional[QuadratureSpec] = None) -> MMSEResult:
    quad = quad or QuadratureSpec()
    if prior.is_discrete and prior.locs.size == 1:
        return MMSEResult(0.0, True, 0)
    prev, n = _mmse_once(prior, channel.eta, quad, 0)
    for level in range(1, 8):
        val, n = _mmse_once(prior, channel.eta, quad, level)
        if abs(val - prev) <= quad.refine_tol or n > quad.cap * 64:
            return MMSEResult(min(max(val, 0.0), prior.var), abs(val - prev) <= quad.refine_tol, n)
        prev = val
    return MMSEResult(min(max(prev, 0.0), prior.var), False, n)


def mmse_quadrature(prior: ScalarPrior, channel: GaussianChannel, quad: Optional[QuadratureSpec] = None) -> float:
    """``int f_Y(y) Var(X | Y = y) dy`` by nested Gauss-Legendre quadrature.

    Inner posterior moments are accumulated in the log domain and centred
    at the posterior mean; both grids are halved until two successive
    values differ by at most ``refine_tol``.
    """
    return mmse_quadrature_detail(prior, channel, quad).value


def mmse_monte_carlo(prior: ScalarPrior, channel: GaussianChannel, n: int, seed: int):
    """Monte Carlo estimate of the MMSE and its standard error.

    Draws ``X`` from the prior and ``Y = X + N``; ``E[X | Y]`` comes from
    closed-form Gaussian moments of the prior.
    """
    if n < 1000:
        raise PreconditionError("n must be at least 1000")
    if prior.is_discrete and prior.locs.size == 1:
        return 0.0, 0.0
    ss = np.random.SeedSequence(seed)
    s_x, s_n = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    x = prior.sample(n, s_x)
    y = x + np.random.default_rng(s_n).normal(0.0, channel.sigma, size=n)
    m = conditional_mean(prior, channel, y)
    err = (x - m) ** 2
    return float(err.mean()), float(err.std(ddof=1) / math.sqrt(n))


def mmse_linear_gaussian(sigma2: float, eta: float) -> float:
    """MMSE of a ``N(mu, sigma2)`` prior under noise variance ``eta``."""
    if not (sigma2 > 0 and eta > 0):
        raise PreconditionError("sigma2 and eta must be positive")
    return sigma2 * eta / (sigma2 + eta)


# ---------------------------------------------------------------------------
# tightness checkers
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    passed: bool
    counterexample: Optional[dict]
    grid_echo: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {"pass": self.passed, "counterexample": self.counterexample, "grid_echo": self.grid_echo}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def default_y_grid(prior: ScalarPrior, channel: GaussianChannel, n: int = DEFAULT_Y_NODES) -> np.ndarray:
    s = math.sqrt(prior.var + channel.eta)
    return np.linspace(prior.mean - GRID_SIGMAS * s, prior.mean + GRID_SIGMAS * s, n)


def default_x_grid(prior: ScalarPrior, n: int = DEFAULT_X_NODES) -> np.ndarray:
    s = prior.std
    return np.linspace(prior.mean - GRID_SIGMAS * s, prior.mean + GRID_SIGMAS * s, n)


def _log_post(prior: ScalarPrior, eta: float, y: float, x):
    x = np.asarray(x, float)
    with np.errstate(divide="ignore"):
        return prior.log_density(x) - 0.5 * (y - x) ** 2 / eta


def check_unimodal_symmetric(prior: ScalarPrior, channel: GaussianChannel, y_grid=None,
                             quad: Optional[QuadratureSpec] = None, x_nodes: int = DEFAULT_X_NODES) -> CheckResult:
    """Search for a posterior that is not unimodal or not symmetric about its mode.

    For each ``y`` the posterior density is sampled on ``x_nodes`` points
    spanning six posterior standard deviations around the posterior mean.
    Unimodality allows one sign change (up then down) of the finite
    differences, ignoring differences below ``1e-9`` of the peak.
    Symmetry compares ``f(m + d)`` and ``f(m - d)`` relative to ``f(m)``
    at the refined mode ``m``.
    """
    if prior.has_atoms:
        raise PreconditionError("check_unimodal_symmetric needs a purely continuous prior")
    eta = channel.eta
    ys = default_y_grid(prior, channel) if y_grid is None else np.asarray(y_grid, float)
    echo = {"x_nodes": int(x_nodes), "y_nodes": int(ys.size), "y_range": [float(ys.min()), float(ys.max())],
            "sigmas": GRID_SIGMAS}
    n0, n1, n2 = prior.gaussian_moments(ys, eta)
    means = n1 / n0
    sds = np.sqrt(np.maximum(n2 / n0 - means**2, 0.0))
    for y, mu, sd in zip(ys, means, sds):
        y = float(y)
        sd = max(sd, 1e-12)
        xg = np.linspace(mu - GRID_SIGMAS * sd, mu + GRID_SIGMAS * sd, x_nodes)
        lp = _log_post(prior, eta, y, xg)
        peak = lp.max()
        f = np.exp(lp - peak)
        d = np.diff(f)
        s = np.where(np.abs(d) <= MONOTONE_TOL, 0, np.sign(d))
        nz = np.nonzero(s)[0]
        sig = s[nz]
        flips = np.nonzero(sig[1:] != sig[:-1])[0]
        bad = None
        if flips.size > 1:
            bad = nz[flips[1] + 1]
        elif flips.size == 1 and sig[0] < 0:
            bad = nz[flips[0] + 1]
        if bad is not None:
            return CheckResult(False, {"y": y, "x": float(xg[bad]), "reason": "not unimodal"}, echo)
        # refine the mode between the neighbours of the grid maximum
        j = int(np.argmax(f))
        a, b = xg[max(j - 1, 0)], xg[min(j + 1, xg.size - 1)]
        res = optimize.minimize_scalar(lambda z: -float(_log_post(prior, eta, y, z)), bounds=(a, b),
                                       method="bounded", options={"xatol": 1e-12 * max(1.0, abs(xg[j]))})
        mode = float(res.x)
        lmode = float(_log_post(prior, eta, y, mode))
        dd = np.linspace(0, GRID_SIGMAS * sd, (x_nodes + 1) // 2)[1:]
        up = np.exp(_log_post(prior, eta, y, mode + dd) - lmode)
        dn = np.exp(_log_post(prior, eta, y, mode - dd) - lmode)
        asym = np.abs(up - dn)
        k = int(np.argmax(asym))
        if asym[k] > SYMMETRY_TOL:
            return CheckResult(False, {"y": y, "x": mode + float(dd[k]), "reason": "not symmetric",
                                       "asymmetry": float(asym[k])}, echo)
    return CheckResult(True, None, echo)


def check_zz_condition(prior: ScalarPrior, channel: GaussianChannel, t_list: Sequence[float], M: int = 2,
                       x_grid=None, y_grid=None, quad: Optional[QuadratureSpec] = None) -> CheckResult:
    """Search ``(t, x, y)`` grids for a violation of the tightness condition.

    The condition requires that some index ``k`` both maximises the
    posterior density at ``x + k t`` and minimises ``|E[X|Y=y] - x - k t|``.
    Both arg-sets include every index within ``1e-9`` of the optimum.
    Points where no shifted posterior has positive density are skipped.
    """
    if int(M) != M or M < 2:
        raise PreconditionError("M must be an integer >= 2")
    ts = np.atleast_1d(np.asarray(t_list, float))
    if np.any(ts <= 0):
        raise PreconditionError("t values must be positive")
    xs = default_x_grid(prior) if x_grid is None else np.asarray(x_grid, float)
    ys = default_y_grid(prior, channel) if y_grid is None else np.asarray(y_grid, float)
    echo = {"t": ts.tolist(), "M": int(M), "x_nodes": int(xs.size), "y_nodes": int(ys.size),
            "x_range": [float(xs.min()), float(xs.max())], "y_range": [float(ys.min()), float(ys.max())]}
    eta = channel.eta
    cm = conditional_mean(prior, channel, ys)
    k = np.arange(M)
    for t in ts:
        pts = xs[:, None] + k[None, :] * t  # (nx, M)
        for y, m in zip(ys, cm):
            if prior.has_atoms:
                mass = prior.mass(pts)
                use_mass = np.any(mass > 0, axis=1)
            else:
                use_mass = np.zeros(xs.size, bool)
            with np.errstate(divide="ignore"):
                lp = np.where(use_mass[:, None], np.log(prior.mass(pts) if prior.has_atoms else 1.0) - 0.5 * (y - pts) ** 2 / eta,
                              _log_post(prior, eta, float(y), pts))
            top = lp.max(axis=1)
            live = np.isfinite(top)
            amax = lp >= (top - TIE_TOL)[:, None]
            dist = np.abs(m - pts)
            amin = dist <= (dist.min(axis=1) + TIE_TOL * np.maximum(1.0, np.abs(m)))[:, None]
            bad = live & ~np.any(amax & amin, axis=1)
            if np.any(bad):
                i = int(np.nonzero(bad)[0][0])
                return CheckResult(False, {
                    "t": float(t), "x": float(xs[i]), "y": float(y),
                    "argmax_set": k[amax[i]].tolist(), "argmin_set": k[amin[i]].tolist(),
                }, echo)
    return CheckResult(True, None, echo)
