"""High-noise limits of the Ziv-Zakai bound and low-noise slope tables.

As the noise level grows the MAP error of each shifted test tends to
``1 - max_k p_k``, and ``h(t, M)`` tends to ``M - H(t, M)`` with

    H(t, M) = int max_j dP_X(x + j t).

The high-noise bound is ``int (t/2) g(t) dt`` with ``g = (M - H)/(M - 1)``,
valley-filled or not. These limits presume a channel whose error
probabilities are nondecreasing in the noise level and converge to the
blind-guess error; both hold for the shipped Gaussian channel.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize

from .channel import GaussianChannel
from .errors import PreconditionError
from .prior import ProductPrior, ScalarPrior
from .quadrature import QuadratureSpec, panel_rule
from .zzb import _kink_points, _merge_close, _reverse_cummax, zz_product, zz_scalar

log = logging.getLogger(__name__)

UNIMODAL_TOL = 1e-10
BISECT_TOL = 1e-12


# ---------------------------------------------------------------------------
# overlap integral H
# ---------------------------------------------------------------------------


def _crossings(law, x: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Points where the argmax over the shifted densities changes."""
    f = law.pdf(x[:, None] + shifts[None, :])
    top = np.argmax(f, axis=1)
    alive = f.max(axis=1) > 0
    idx = np.nonzero((top[1:] != top[:-1]) & alive[1:] & alive[:-1])[0]
    out = []
    for i in idx:
        j, k = top[i], top[i + 1]

        def diff(z, j=j, k=k):
            return float(law.pdf(z + shifts[j]) - law.pdf(z + shifts[k]))

        a, b = x[i], x[i + 1]
        da, db = diff(a), diff(b)
        if da == 0 or db == 0:
            out.append(a if da == 0 else b)
        elif da * db < 0:
            out.append(optimize.brentq(diff, a, b, xtol=1e-14, rtol=1e-14))
        else:
            out.append(0.5 * (a + b))
    return np.asarray(out)


def _gap_continuous(law, t: float, M: int, tol: float, cap: int, order: int = 8):
    """``int (sum_j f(x + j t) - max_j f(x + j t)) dx`` and a convergence flag."""
    shifts = np.arange(M) * t
    lo, hi = law.window()
    lo -= shifts[-1]
    bps = law.breakpoints()
    breaks = [lo, hi]
    if bps.size:
        breaks.extend((bps[:, None] - shifts[None, :]).ravel())
    probe = np.linspace(lo, hi, 4097)
    breaks.extend(_crossings(law, probe, shifts))
    breaks = np.asarray(breaks)
    breaks = breaks[(breaks >= lo) & (breaks <= hi)]
    width = 0.5 * law.scale
    prev = None
    while True:
        x, w = panel_rule(breaks, width, order)
        if x.size > cap:
            return (prev if prev is not None else 0.0), False
        f = law.pdf(x[:, None] + shifts[None, :])
        val = float(w @ (f.sum(axis=1) - f.max(axis=1)))
        if prev is not None and abs(val - prev) <= tol:
            return val, True
        prev = val
        width /= 2


def _gap_discrete(prior: ScalarPrior, t: float, M: int) -> float:
    shifts = np.arange(M) * t
    xs = _merge_close((prior.locs[:, None] - shifts[None, :]).ravel())
    p = prior.mass(xs[:, None] + shifts[None, :]) / (1.0 - prior.alpha)
    return float((p.sum(axis=1) - p.max(axis=1)).sum())


def _is_unimodal(law) -> bool:
    if law.unimodal is not None:
        return bool(law.unimodal)
    lo, hi = law.window()
    x = np.linspace(lo, hi, 20001)
    d = np.diff(law.pdf(x))
    s = np.sign(np.where(np.abs(d) <= UNIMODAL_TOL, 0.0, d))
    s = s[s != 0]
    changes = np.count_nonzero(s[1:] != s[:-1])
    return changes == 0 or (changes == 1 and s[0] > 0)


def _unimodal_gap(law, t: float) -> float:
    """``1 - (F(a + t) - F(a))`` with ``f(a) = f(a + t)`` on ``[m - t, m]``."""
    m = law.mode
    lo, hi = m - t, m
    g_lo = law.pdf(lo) - law.pdf(lo + t)
    if g_lo >= 0:
        a = lo
    else:
        # bisection on a sign change of f(a) - f(a + t)
        while hi - lo > BISECT_TOL * max(1.0, abs(m) + t):
            mid = 0.5 * (lo + hi)
            if law.pdf(mid) - law.pdf(mid + t) < 0:
                lo = mid
            else:
                hi = mid
        a = 0.5 * (lo + hi)
    return float(law.cdf(a) + (1.0 - law.cdf(a + t)))


def H_overlap(prior: ScalarPrior, t: float, M: int, quad: Optional[QuadratureSpec] = None) -> float:
    """``H(t, M) = int max_j dP_X(x + j t)``, a value in ``[1, M]``."""
    return M - overlap_gap(prior, t, M, quad)[0]


def overlap_gap(prior: ScalarPrior, t: float, M: int, quad: Optional[QuadratureSpec] = None):
    """``M - H(t, M)`` computed without cancellation, and a convergence flag."""
    _validate(prior, t, M)
    quad = quad or QuadratureSpec()
    total, ok = 0.0, True
    if prior.has_continuous:
        g, ok = _gap_continuous(prior.continuous, float(t), int(M), quad.refine_tol / prior.alpha, quad.cap, quad.gl_order)
        total += prior.alpha * g
    if prior.has_atoms:
        total += (1.0 - prior.alpha) * _gap_discrete(prior, float(t), int(M))
    return min(max(total, 0.0), M - 1.0), ok


def H_unimodal(prior: ScalarPrior, t: float, M: int) -> float:
    """Closed form ``1 + (M - 1)(F(a + t) - F(a))`` for a unimodal density.

    ``a`` solves ``f(a) = f(a + t)`` between ``mode - t`` and the mode.
    """
    _validate(prior, t, M)
    if prior.has_atoms:
        raise PreconditionError("H_unimodal needs a purely continuous prior")
    if not _is_unimodal(prior.continuous):
        raise PreconditionError("density failed the unimodality check")
    return 1.0 + (M - 1) * (1.0 - _unimodal_gap(prior.continuous, float(t)))


def _validate(prior, t, M):
    if not isinstance(prior, ScalarPrior):
        raise PreconditionError("expected a ScalarPrior")
    if not t > 0:
        raise PreconditionError("t must be positive")
    if int(M) != M or M < 2:
        raise PreconditionError("M must be an integer >= 2")


# ---------------------------------------------------------------------------
# high-noise bound
# ---------------------------------------------------------------------------


@dataclass
class HighNoiseReport:
    """High-noise bound with the prior variance it is compared against."""

    value: float
    variance: float
    per_t: np.ndarray
    converged: bool = True
    M: int = 2
    with_valley_fill: bool = True
    route: str = "overlap"
    shift: float = 0.0
    truncation_estimate: float = 0.0
    spec_echo: Optional[QuadratureSpec] = None

    @property
    def gap(self) -> float:
        return self.variance - self.value

    def to_dict(self, include_per_t: bool = True) -> dict:
        d = {
            "value": float(self.value),
            "variance": float(self.variance),
            "gap": float(self.gap),
            "converged": bool(self.converged),
            "M": int(self.M),
            "valley_fill": bool(self.with_valley_fill),
            "route": self.route,
            "shift": float(self.shift),
            "truncation_estimate": float(self.truncation_estimate),
        }
        if self.spec_echo is not None:
            d["spec_echo"] = self.spec_echo.to_dict()
        if include_per_t:
            d["per_t"] = np.asarray(self.per_t, float).tolist()
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        """Rows ``t, value`` where value is ``H(t, M)``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, h in np.asarray(self.per_t, float)[:, :2]:
            w.writerow([repr(float(t)), repr(float(h))])
        return buf.getvalue()


def high_noise_bound(prior: ScalarPrior, M: int = 2, with_valley_fill: bool = True,
                     quad: Optional[QuadratureSpec] = None, route: str = "overlap",
                     center: bool = False) -> HighNoiseReport:
    """Limit of the Ziv-Zakai bound as the noise level grows.

    Parameters
    ----------
    route : {"overlap", "finite_noise"}
        ``"overlap"`` integrates ``(M - H)/(M - 1)`` with ``H`` from
        :func:`H_unimodal` when the density is known to be unimodal and from
        :func:`overlap_gap` otherwise; alignment points of the atoms are
        evaluation nodes. ``"finite_noise"`` evaluates the Ziv-Zakai bound
        itself at ``eta = 1e6 (span + std)**2`` with every error probability
        obtained by y-quadrature (purely discrete priors only).
    center : bool
        Shift the prior to zero mean first; the shift is logged and stored.
    """
    if not isinstance(prior, ScalarPrior):
        raise PreconditionError("expected a ScalarPrior")
    if int(M) != M or M < 2:
        raise PreconditionError("M must be an integer >= 2")
    M = int(M)
    quad = quad or QuadratureSpec()
    shift = 0.0
    if center:
        shift = -prior.mean
        prior = prior.centered()
        log.info("high_noise_bound: prior centred by shift %.17g", shift)
    variance = prior.var
    if route == "finite_noise":
        return _finite_noise(prior, M, with_valley_fill, quad, shift, variance)
    if route != "overlap":
        raise PreconditionError(f"unknown route {route!r}")

    use_closed = prior.alpha == 1.0 and _is_unimodal(prior.continuous)

    def gap(t, tol):
        if use_closed:
            return (M - 1) * _unimodal_gap(prior.continuous, t), True
        q = quad.replace(refine_tol=tol)
        return overlap_gap(prior, t, M, q)

    std = prior.std
    align = prior.alignment_set(M) if prior.has_atoms else np.empty(0)
    if quad.t_max is not None:
        t_max = float(quad.t_max)
    else:
        t_max = prior.span + 12.0 * std
        if align.size:
            t_max = max(t_max, 1.01 * align.max())
        for _ in range(12):
            tol = (M - 1) * quad.refine_tol / (1 + t_max**2)
            if 0.5 * t_max * gap(t_max, tol)[0] / (M - 1) * std <= quad.refine_tol:
                break
            t_max *= 1.5
    tol = (M - 1) * quad.refine_tol / (1 + t_max**2)
    tail = gap(t_max, tol)[0] / (M - 1)

    extra = np.asarray(quad.extra_t_nodes, float)
    extra = extra[extra <= t_max]
    breaks = np.concatenate([np.linspace(0, t_max, quad.t_nodes + 1), _kink_points(prior, M), align, extra])
    t_gl, w_gl = panel_rule(breaks[(breaks >= 0) & (breaks <= t_max)], t_max, quad.gl_order)
    zero = _merge_close(np.concatenate([align, extra]) if with_valley_fill else extra)
    t_all = np.concatenate([t_gl, zero])
    w_all = np.concatenate([w_gl, np.zeros(zero.size)])
    order = np.argsort(t_all, kind="stable")
    t_all, w_all = t_all[order], w_all[order]
    g = np.empty(t_all.size)
    converged = True
    for i, t in enumerate(t_all):
        val, ok = gap(float(t), tol)
        g[i] = min(max(val / (M - 1), 0.0), 1.0)
        converged &= ok
    filled = _reverse_cummax(np.concatenate([g, [tail]]))[:-1]
    used = filled if with_valley_fill else g
    value = float(np.sum(w_all * 0.5 * t_all * used))
    trunc = 0.5 * t_max * tail * std
    H = M - (M - 1) * g
    return HighNoiseReport(
        value=max(value, 0.0),
        variance=variance,
        per_t=np.column_stack([t_all, H, g, filled]),
        converged=bool(converged and trunc <= quad.refine_tol),
        M=M,
        with_valley_fill=with_valley_fill,
        route="overlap",
        shift=shift,
        truncation_estimate=trunc,
        spec_echo=quad.replace(t_max=t_max) if quad.t_max is None else quad,
    )


def finite_noise_eta(prior: ScalarPrior) -> float:
    return 1e6 * (prior.span + prior.std) ** 2


def _finite_noise(prior, M, with_valley_fill, quad, shift, variance):
    if prior.has_continuous:
        raise PreconditionError("the finite_noise route supports purely discrete priors only")
    eta = finite_noise_eta(prior)
    rep = zz_scalar(prior, GaussianChannel(eta), M, with_valley_fill, quad, method="quadrature")
    per_t = rep.per_t
    H = M - (M - 1) * per_t[:, 1]
    return HighNoiseReport(
        value=rep.value,
        variance=variance,
        per_t=np.column_stack([per_t[:, 0], H, per_t[:, 1], per_t[:, 2]]),
        converged=rep.converged,
        M=M,
        with_valley_fill=with_valley_fill,
        route="finite_noise",
        shift=shift,
        truncation_estimate=rep.truncation_estimate,
        spec_echo=rep.spec_echo,
    )


def bernoulli_high_noise(p: float) -> float:
    """Closed-form valley-filled high-noise bound for ``Ber(p)``, M = 2."""
    if not 0.0 < p < 1.0:
        raise PreconditionError("p must lie strictly between 0 and 1")
    return min(p, 1.0 - p) / 4.0


# ---------------------------------------------------------------------------
# low-noise slope
# ---------------------------------------------------------------------------


class SlopeEntry(NamedTuple):
    eta: float
    zz_over_eta: float
    converged: bool


def low_noise_slope(prior, eta_list: Sequence[float], quad: Optional[QuadratureSpec] = None) -> list:
    """``ZZ(eta)/eta`` for M = 2 without valley-filling at each noise level.

    Grids scale with ``sqrt(eta)`` automatically; entries whose quadrature
    did not converge are flagged.
    """
    etas = [float(e) for e in eta_list]
    if not etas or any(not e > 0 for e in etas):
        raise PreconditionError("eta_list must contain positive values")
    if any(b >= a for a, b in zip(etas, etas[1:])):
        raise PreconditionError("eta_list must be strictly decreasing")
    quad = quad or QuadratureSpec()
    out = []
    for eta in etas:
        # relative accuracy must survive the shrinking bound
        q = quad.replace(refine_tol=min(quad.refine_tol, 1e-4 * eta))
        if isinstance(prior, ProductPrior):
            rep = zz_product(prior, [GaussianChannel(eta)] * prior.dim, 2, False, q)
        else:
            rep = zz_scalar(prior, GaussianChannel(eta), 2, False, q)
        out.append(SlopeEntry(eta, rep.value / eta, rep.converged))
    return out


def slope_table_csv(entries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eta", "value"])
    for e in entries:
        w.writerow([repr(e.eta), repr(e.zz_over_eta)])
    return buf.getvalue()
