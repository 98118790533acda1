"""Ziv-Zakai lower bound on the MMSE, with and without valley-filling.

For a scalar prior the hypothesis offsets are ``u_k = k t`` and

    h(t, M) = int sum_l q_l(x) miss_l(x) dx,   q_l(x) = dP_X(x + l t),

where ``miss_l`` is the probability that the MAP rule rejects hypothesis
``l`` when it is true. The bound is ``int_0^inf (t/2) g(t) dt`` with
``g = h/(M-1)`` (plain) or its valley-filled envelope ``sup_{u>=t} g(u)``.
For product priors with independent coordinates the bound is the sum of
the per-coordinate scalar bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .channel import GaussianChannel
from .errors import PreconditionError, SpecError
from .prior import ATOM_TOL, ProductPrior, ScalarPrior
from .quadrature import QuadratureSpec, panel_rule

OFFSET_NOTE = "offsets restricted to u_k = k t along each coordinate"
MAX_TMAX_EXTENSIONS = 12


@dataclass
class HValue:
    """Value of ``h`` at one ``t`` with its convergence flag."""

    value: float
    converged: bool = True
    nodes: int = 0


def _merge_close(points: np.ndarray) -> np.ndarray:
    pts = np.sort(np.asarray(points, float))
    if pts.size < 2:
        return pts
    keep = np.concatenate([[True], np.diff(pts) > ATOM_TOL * np.maximum(1.0, np.abs(pts[1:]))])
    return pts[keep]


def _h_discrete(prior: ScalarPrior, eta: float, t: float, M: int, method: str, quad: QuadratureSpec) -> float:
    """Atom part of ``h``: a finite sum over the union of shifted supports."""
    ells = np.arange(M) * t
    xs = _merge_close((prior.locs[:, None] - ells[None, :]).ravel())
    q = prior.mass(xs[:, None] + ells[None, :]) / (1.0 - prior.alpha)
    busy = np.count_nonzero(q > 0, axis=1) >= 2
    if not np.any(busy):
        return 0.0
    q = q[busy]
    if method == "envelope":
        return float(kernels.weighted_map_error(q, t, eta).sum())
    from .hypotest import HypothesisProblem, map_error

    channel = GaussianChannel(eta)
    total = 0.0
    for row in q:
        s = row.sum()
        total += s * map_error(HypothesisProblem.scalar(0.0, t, row / s), channel, quad)
    return total


def _x_layout(prior: ScalarPrior, eta: float, t: float, M: int, quad: QuadratureSpec):
    law = prior.continuous
    lo, hi = quad.x_window if quad.x_window is not None else law.window()
    shifts = np.arange(M) * t
    bps = law.breakpoints()
    breaks = [lo - shifts[-1], hi]
    if bps.size:
        breaks.extend((bps[:, None] - shifts[None, :]).ravel())
    breaks = np.asarray(breaks)
    breaks = breaks[(breaks >= lo - shifts[-1]) & (breaks <= hi)]
    scale = law.scale
    width = 0.5 * min(scale, scale * scale / math.sqrt(eta))
    return breaks, width


def _h_continuous(prior: ScalarPrior, eta: float, t: float, M: int, quad: QuadratureSpec, tol: float, method: str) -> HValue:
    """Continuous part of ``h`` by refined composite Gauss-Legendre in x."""
    law = prior.continuous
    shifts = np.arange(M) * t
    breaks, width = _x_layout(prior, eta, t, M, quad)
    cap = quad.cap
    span = breaks.max() - breaks.min()
    width = max(width, span * quad.gl_order / cap * 2)
    prev = None
    n = 0
    while True:
        x, w = panel_rule(breaks, width, quad.gl_order)
        if x.size > cap:
            return HValue(prev if prev is not None else 0.0, False, n)
        q = law.pdf(x[:, None] + shifts[None, :])
        if method == "envelope":
            per_x = kernels.weighted_map_error(q, t, eta)
        else:
            per_x = _per_x_by_quadrature(q, t, eta, quad)
        val = float(w @ per_x)
        n = x.size
        if prev is not None and abs(val - prev) <= tol:
            return HValue(val, True, n)
        prev = val
        width /= 2


def _per_x_by_quadrature(q, t, eta, quad):
    from .hypotest import HypothesisProblem, map_error

    channel = GaussianChannel(eta)
    out = np.zeros(q.shape[0])
    for i, row in enumerate(q):
        s = row.sum()
        if s > 0 and np.count_nonzero(row) >= 2:
            out[i] = s * map_error(HypothesisProblem.scalar(0.0, t, row / s), channel, quad)
    return out


def _h_eval(prior: ScalarPrior, eta: float, t: float, M: int, quad: QuadratureSpec, tol: float,
            method: str = "envelope", with_atoms: bool = True) -> HValue:
    total = 0.0
    ok = True
    n = 0
    if prior.has_continuous:
        hc = _h_continuous(prior, eta, t, M, quad, tol / prior.alpha, method)
        total += prior.alpha * hc.value
        ok, n = hc.converged, hc.nodes
    if prior.has_atoms and with_atoms:
        total += (1.0 - prior.alpha) * _h_discrete(prior, eta, t, M, method, quad)
    return HValue(min(max(total, 0.0), M - 1.0), ok, n)


def _check_args(prior, M):
    if not isinstance(prior, ScalarPrior):
        raise PreconditionError("expected a ScalarPrior")
    if int(M) != M or M < 2:
        raise PreconditionError("M must be an integer >= 2")


def h_scalar(prior: ScalarPrior, channel: GaussianChannel, t: float, M: int,
             quad: Optional[QuadratureSpec] = None, method: str = "envelope") -> float:
    """Integrated minimum error probability ``h(t, M)`` for offsets ``k t``.

    Parameters
    ----------
    method : {"envelope", "quadrature"}
        ``"envelope"`` integrates the MAP error in y exactly (Gaussian
        tails over the decision intervals); ``"quadrature"`` evaluates each
        error probability with :func:`zzbound.hypotest.map_error`.

    Notes
    -----
    For atoms the value is the right limit at ``t``: exact coincidences of
    shifted atoms contribute only when ``t`` is an alignment point.
    """
    _check_args(prior, M)
    if not t > 0:
        raise PreconditionError("t must be positive")
    if method not in ("envelope", "quadrature"):
        raise SpecError(f"unknown method {method!r}")
    quad = quad or QuadratureSpec()
    return _h_eval(prior, channel.eta, float(t), int(M), quad, quad.refine_tol, method).value


def valley_fill(nodes):
    """Reverse running maximum of ``(t, value)`` pairs sorted by ``t``."""
    arr = np.asarray(nodes, float)
    if arr.size == 0:
        raise PreconditionError("valley_fill needs at least one node")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise PreconditionError("nodes must be (t, value) pairs")
    if np.any(np.diff(arr[:, 0]) < 0):
        raise PreconditionError("nodes must be sorted by t")
    filled = _reverse_cummax(arr[:, 1])
    return [(float(a), float(b)) for a, b in zip(arr[:, 0], filled)]


def _reverse_cummax(v: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(np.asarray(v, float)[::-1])[::-1]


@dataclass
class BoundReport:
    """A bound value with its per-t diagnostics.

    ``per_t`` has rows ``(t, h/(M-1), valley-filled h/(M-1))``; rows with
    zero quadrature weight (alignment and user nodes) are included.
    """

    value: float
    per_t: np.ndarray
    truncation_estimate: float
    converged: bool
    spec_echo: QuadratureSpec
    M: int = 2
    with_valley_fill: bool = False
    t_max: float = 0.0
    eta: float = 0.0
    note: str = OFFSET_NOTE
    components: list = field(default_factory=list)

    def to_dict(self, include_per_t: bool = True) -> dict:
        d = {
            "value": float(self.value),
            "truncation_estimate": float(self.truncation_estimate),
            "converged": bool(self.converged),
            "M": int(self.M),
            "valley_fill": bool(self.with_valley_fill),
            "t_max": float(self.t_max),
            "eta": float(self.eta),
            "note": self.note,
            "spec_echo": self.spec_echo.to_dict(),
        }
        if include_per_t:
            d["per_t"] = np.asarray(self.per_t, float).tolist()
        if self.components:
            d["components"] = [c.to_dict(include_per_t) for c in self.components]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass
class _Curve:
    t: np.ndarray
    w: np.ndarray
    ratio: np.ndarray
    filled: np.ndarray
    t_max: float
    trunc_plain: float
    trunc_vf: float
    converged: bool


def _kink_points(prior: ScalarPrior, M: int) -> np.ndarray:
    if not prior.has_continuous:
        return np.empty(0)
    b = prior.continuous.breakpoints()
    if b.size < 2:
        return np.empty(0)
    d = (b[:, None] - b[None, :])
    d = d[d > 0]
    return (d[:, None] / np.arange(1, M)[None, :]).ravel()


def default_t_max(prior: ScalarPrior, eta: float) -> float:
    return prior.span + 12.0 * prior.std + 12.0 * math.sqrt(eta)


def _curve(prior: ScalarPrior, eta: float, M: int, quad: QuadratureSpec, method: str = "envelope",
           alignment_nodes: bool = True) -> _Curve:
    sd = math.sqrt(eta)
    spread = prior.std + sd
    align = prior.alignment_set(M) if prior.has_atoms else np.empty(0)
    if quad.t_max is not None:
        t_max = float(quad.t_max)
        tol = (M - 1) * quad.refine_tol / (1.0 + t_max**2)
        tail = _h_eval(prior, eta, t_max, M, quad, tol, method).value / (M - 1)
    else:
        t_max = default_t_max(prior, eta)
        if align.size:
            t_max = max(t_max, 1.01 * align.max())
        for _ in range(MAX_TMAX_EXTENSIONS):
            tol = (M - 1) * quad.refine_tol / (1.0 + t_max**2)
            tail = _h_eval(prior, eta, t_max, M, quad, tol, method).value / (M - 1)
            if 0.5 * t_max * tail * spread <= quad.refine_tol:
                break
            t_max *= 1.5
    tol = (M - 1) * quad.refine_tol / (1.0 + t_max**2)

    extra = np.asarray(quad.extra_t_nodes, float)
    extra = extra[extra <= t_max]
    noise_pts = sd * 0.25 * np.arange(1, 65)
    breaks = np.concatenate([
        np.linspace(0.0, t_max, quad.t_nodes + 1),
        noise_pts[noise_pts < t_max],
        _kink_points(prior, M),
        align,
        extra,
    ])
    breaks = breaks[(breaks >= 0) & (breaks <= t_max)]
    t_gl, w_gl = panel_rule(breaks, t_max, quad.gl_order)
    zero_nodes = _merge_close(np.concatenate([align, extra])) if alignment_nodes else _merge_close(extra)
    t_all = np.concatenate([t_gl, zero_nodes])
    w_all = np.concatenate([w_gl, np.zeros(zero_nodes.size)])
    order = np.argsort(t_all, kind="stable")
    t_all, w_all = t_all[order], w_all[order]

    ratio = np.empty(t_all.size)
    converged = True
    for i, t in enumerate(t_all):
        hv = _h_eval(prior, eta, float(t), M, quad, tol, method)
        ratio[i] = min(max(hv.value / (M - 1), 0.0), 1.0)
        converged &= hv.converged
    filled = _reverse_cummax(np.concatenate([ratio, [tail]]))[:-1]
    return _Curve(
        t=t_all, w=w_all, ratio=ratio, filled=filled, t_max=t_max,
        trunc_plain=0.5 * t_max * tail * spread,
        trunc_vf=0.5 * t_max * max(tail, 0.0) * spread,
        converged=converged,
    )


def _report(curve: _Curve, with_valley_fill: bool, quad: QuadratureSpec, M: int, eta: float) -> BoundReport:
    g = curve.filled if with_valley_fill else curve.ratio
    value = float(np.sum(curve.w * 0.5 * curve.t * g))
    trunc = curve.trunc_vf if with_valley_fill else curve.trunc_plain
    return BoundReport(
        value=max(value, 0.0),
        per_t=np.column_stack([curve.t, curve.ratio, curve.filled]),
        truncation_estimate=trunc,
        converged=bool(curve.converged and trunc <= quad.refine_tol),
        spec_echo=quad.replace(t_max=curve.t_max) if quad.t_max is None else quad,
        M=M,
        with_valley_fill=with_valley_fill,
        t_max=curve.t_max,
        eta=eta,
    )


def zz_scalar(prior: ScalarPrior, channel: GaussianChannel, M: int = 2, with_valley_fill: bool = True,
              quad: Optional[QuadratureSpec] = None, method: str = "envelope") -> BoundReport:
    """Ziv-Zakai bound ``int_0^t_max (t/2) g(t) dt`` for a scalar prior.

    The t-grid is composite Gauss-Legendre on uniform panels, refined near
    the origin on the noise scale and split at support kinks and at the
    alignment set of the atoms. With valley-filling, alignment points and
    ``extra_t_nodes`` are also evaluation nodes (zero weight) so that the
    reverse running maximum sees the isolated values of ``h`` there; the
    plain integral never samples them.
    """
    _check_args(prior, M)
    quad = quad or QuadratureSpec()
    curve = _curve(prior, channel.eta, int(M), quad, method, alignment_nodes=with_valley_fill)
    return _report(curve, with_valley_fill, quad, int(M), channel.eta)


def zz_scalar_both(prior: ScalarPrior, channel: GaussianChannel, M: int = 2,
                   quad: Optional[QuadratureSpec] = None, method: str = "envelope"):
    """Plain and valley-filled reports from one shared evaluation of ``h``.

    Alignment nodes carry zero weight, so the plain value is unaffected by
    their presence in the shared grid.
    """
    _check_args(prior, M)
    quad = quad or QuadratureSpec()
    curve = _curve(prior, channel.eta, int(M), quad, method, alignment_nodes=True)
    return _report(curve, False, quad, int(M), channel.eta), _report(curve, True, quad, int(M), channel.eta)


def zz_product(prior: ProductPrior, channels: Sequence[GaussianChannel], M: int = 2, with_valley_fill: bool = True,
               quad: Optional[QuadratureSpec] = None) -> BoundReport:
    """Sum of per-coordinate scalar bounds for independent coordinates."""
    if isinstance(channels, GaussianChannel):
        channels = [GaussianChannel(channels.eta)] * prior.dim
    channels = list(channels)
    if len(channels) != prior.dim:
        raise PreconditionError(f"{prior.dim} factors but {len(channels)} channels")
    quad = quad or QuadratureSpec()
    parts = [zz_scalar(f, c, M, with_valley_fill, quad) for f, c in zip(prior.factors, channels)]
    return BoundReport(
        value=float(sum(p.value for p in parts)),
        per_t=np.empty((0, 3)),
        truncation_estimate=float(sum(p.truncation_estimate for p in parts)),
        converged=all(p.converged for p in parts),
        spec_echo=quad,
        M=int(M),
        with_valley_fill=with_valley_fill,
        t_max=max(p.t_max for p in parts),
        eta=float(channels[0].eta),
        components=parts,
    )
