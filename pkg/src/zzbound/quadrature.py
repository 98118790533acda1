"""Quadrature settings and the small set of rules shared by every module."""

from __future__ import annotations

import dataclasses
import functools
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SpecError

DEFAULT_NODE_CAP = 2**20


def node_cap(override: Optional[int] = None) -> int:
    """Largest number of nodes any single rule may use.

    ``ZZB_NODE_CAP`` in the environment replaces the default of 2**20.
    """
    if override is not None:
        return int(override)
    raw = os.environ.get("ZZB_NODE_CAP")
    if raw is None:
        return DEFAULT_NODE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise SpecError(f"ZZB_NODE_CAP must be an integer, got {raw!r}") from exc
    if cap < 64:
        raise SpecError("ZZB_NODE_CAP must be at least 64")
    return cap


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretisation of the t-, x- and y-integrals.

    Parameters
    ----------
    t_max : float or None
        Truncation of the outer t-integral. ``None`` selects the default
        ``span + 12 std + 12 sqrt(eta)``, extended while the truncation
        estimate exceeds ``refine_tol``.
    t_nodes : int
        Number of uniform panels on ``[0, t_max]``; each panel carries
        ``gl_order`` Gauss-Legendre nodes.
    x_window : (float, float) or None
        Override for the x-integration window of continuous parts.
    y_window_sigma : float
        Half-width of observation windows in units of ``sqrt(eta)``.
    refine_tol : float
        Target absolute accuracy of a reported value.
    extra_t_nodes : sequence of float
        Additional t values forced into the grid (panel breakpoints and,
        for valley-filled bounds, evaluation nodes).
    gl_order : int
        Gauss-Legendre order per panel.
    node_cap : int or None
        Per-rule node limit; ``None`` reads ``ZZB_NODE_CAP``.
    """

    t_max: Optional[float] = None
    t_nodes: int = 64
    x_window: Optional[tuple] = None
    y_window_sigma: float = 10.0
    refine_tol: float = 1e-7
    extra_t_nodes: tuple = field(default_factory=tuple)
    gl_order: int = 8
    node_cap: Optional[int] = None

    def __post_init__(self):
        if self.t_max is not None and not self.t_max > 0:
            raise SpecError("t_max must be positive")
        if int(self.t_nodes) < 16:
            raise SpecError("t_nodes must be at least 16")
        if not self.refine_tol > 0:
            raise SpecError("refine_tol must be positive")
        if not self.y_window_sigma > 0:
            raise SpecError("y_window_sigma must be positive")
        if self.gl_order < 2:
            raise SpecError("gl_order must be at least 2")
        extra = tuple(float(v) for v in self.extra_t_nodes)
        for v in extra:
            if not v > 0 or (self.t_max is not None and v > self.t_max):
                raise SpecError(f"extra_t_nodes entry {v} outside (0, t_max]")
        object.__setattr__(self, "extra_t_nodes", extra)
        if self.x_window is not None:
            lo, hi = (float(v) for v in self.x_window)
            if not hi > lo:
                raise SpecError("x_window must be an increasing interval")
            object.__setattr__(self, "x_window", (lo, hi))

    def replace(self, **changes) -> "QuadratureSpec":
        return dataclasses.replace(self, **changes)

    def refined(self) -> "QuadratureSpec":
        """Same spec with doubled t resolution and GL order."""
        return self.replace(t_nodes=2 * self.t_nodes, gl_order=2 * self.gl_order)

    @property
    def cap(self) -> int:
        return node_cap(self.node_cap)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["extra_t_nodes"] = list(self.extra_t_nodes)
        d["x_window"] = list(self.x_window) if self.x_window is not None else None
        d["node_cap"] = self.cap
        return d


@functools.lru_cache(maxsize=32)
def gauss_legendre(order: int):
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breaks: Sequence[float], max_width: float, order: int):
    """Composite Gauss-Legendre rule respecting the given breakpoints.

    Every interval between consecutive (sorted, deduplicated) breakpoints is
    split into equal panels no wider than ``max_width``. Nodes never fall on
    a breakpoint.
    """
    b = np.unique(np.asarray(breaks, dtype=float))
    if b.size < 2:
        return np.empty(0), np.empty(0)
    lengths = np.diff(b)
    keep = lengths > 0
    lo, lengths = b[:-1][keep], lengths[keep]
    counts = np.maximum(1, np.ceil(lengths / max_width).astype(int))
    starts = np.concatenate([lo[i] + lengths[i] * np.arange(counts[i]) / counts[i] for i in range(lo.size)])
    widths = np.repeat(lengths / counts, counts)
    gx, gw = gauss_legendre(order)
    mid = starts + widths / 2
    nodes = (mid[:, None] + widths[:, None] / 2 * gx[None, :]).ravel()
    weights = (widths[:, None] / 2 * gw[None, :]).ravel()
    return nodes, weights


def simpson(values: np.ndarray, h: float) -> float:
    """Composite Simpson rule on an odd number of equispaced samples."""
    n = values.size
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson rule needs an odd number (>= 3) of samples")
    return float(h / 3 * (values[0] + values[-1] + 4 * values[1:-1:2].sum() + 2 * values[2:-1:2].sum()))


def simpson_refine(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float,
    n0: int = 65,
    cap: int = DEFAULT_NODE_CAP,
):
    """Composite Simpson on ``[a, b]`` refined by interval halving.

    Stops when two successive estimates differ by less than ``tol`` or
    when the next level would exceed ``cap`` nodes.

    Returns
    -------
    value : float
    converged : bool
    n : int
        Number of samples used by the final estimate.
    """
    if b <= a:
        return 0.0, True, 0
    n = n0 if n0 % 2 == 1 else n0 + 1
    x = np.linspace(a, b, n)
    fx = np.asarray(func(x), dtype=float)
    prev = simpson(fx, (b - a) / (n - 1))
    while 2 * n - 1 <= cap:
        h = (b - a) / (n - 1)
        mids = a + h * (np.arange(n - 1) + 0.5)
        fm = np.asarray(func(mids), dtype=float)
        merged = np.empty(2 * n - 1)
        merged[0::2] = fx
        merged[1::2] = fm
        fx, n = merged, 2 * n - 1
        cur = simpson(fx, h / 2)
        if abs(cur - prev) < tol:
            return cur, True, n
        prev = cur
    return prev, False, n
