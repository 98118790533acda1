"""M-ary Gaussian hypothesis tests and their minimum error probability.

Hypothesis ``k`` states ``Y ~ N(center + u_k, eta I)`` and has prior weight
``p_k``. The MAP rule (ties broken towards the lowest index) attains the
minimum error probability computed by :func:`map_error`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .channel import GaussianChannel
from .errors import OutsideSupportError, PreconditionError, SpecError
from .prior import ProductPrior, ScalarPrior
from .quadrature import QuadratureSpec, simpson_refine

MAP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HypothesisProblem:
    """Center ``x``, offsets ``U = (u_0, ..., u_{M-1})`` and weights ``P``."""

    center: np.ndarray
    offsets: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, float))
        offsets = np.asarray(self.offsets, float)
        if offsets.ndim == 1:
            offsets = offsets[:, None]
        priors = np.asarray(self.priors, float).ravel()
        if center.ndim != 1 or offsets.ndim != 2 or offsets.shape[1] != center.size:
            raise PreconditionError("offsets must be vectors of the same dimension as the center")
        if offsets.shape[0] != priors.size:
            raise PreconditionError("need exactly one prior weight per offset")
        if priors.size < 2:
            raise PreconditionError("M must be at least 2")
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
            raise PreconditionError("prior weights must be nonnegative and sum to 1")
        for arr in (center, offsets, priors):
            arr.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "priors", priors)

    @property
    def M(self) -> int:
        return self.priors.size

    @property
    def means(self) -> np.ndarray:
        """Observation means ``center + u_k`` (M x d)."""
        return self.center[None, :] + self.offsets

    @classmethod
    def scalar(cls, x: float, t: float, priors: Sequence[float]) -> "HypothesisProblem":
        """Problem with scalar offsets ``u_k = k t``."""
        M = len(priors)
        return cls(np.array([x]), np.arange(M, dtype=float) * t, priors)


def priors_at(prior, x, U) -> np.ndarray:
    """Weights ``p_k`` of the shifted laws ``P_{X - u_k}`` at ``x``.

    Masses take precedence over densities: if any shifted law has an atom at
    ``x`` the weights are the normalised masses, otherwise the normalised
    densities.
    """
    U = np.asarray(U, float)
    if isinstance(prior, ScalarPrior):
        pts = float(np.asarray(x, float).ravel()[0]) + U.ravel()
        raw = prior.mass(pts)
        if not np.any(raw > 0):
            raw = prior.density(pts)
    elif isinstance(prior, ProductPrior):
        x = np.atleast_1d(np.asarray(x, float))
        if U.ndim == 1:
            U = U[:, None]
        if U.shape[1] != prior.dim or x.size != prior.dim:
            raise PreconditionError("offset and center dimensions must match the prior")
        raw = np.ones(U.shape[0])
        for i, f in enumerate(prior.factors):
            col = x[i] + U[:, i]
            m = f.mass(col)
            raw *= m if np.any(m > 0) else f.density(col)
    else:
        raise PreconditionError("prior must be a ScalarPrior or ProductPrior")
    total = raw.sum()
    if not total > 0:
        raise OutsideSupportError(f"no shifted law charges x={x!r}")
    return raw / total


def _collinear_projection(means: np.ndarray) -> np.ndarray:
    """Scalar coordinates of collinear mean vectors along their common line."""
    if means.shape[1] == 1:
        return means[:, 0]
    base = means[0]
    diffs = means - base
    norms = np.linalg.norm(diffs, axis=1)
    if norms.max() == 0:
        return np.zeros(means.shape[0])
    direction = diffs[np.argmax(norms)] / norms.max()
    proj = diffs @ direction
    resid = np.linalg.norm(diffs - proj[:, None] * direction, axis=1)
    if resid.max() > 1e-12 * max(1.0, norms.max()):
        raise PreconditionError("map_error supports only collinear hypothesis means in dimension > 1")
    return proj


def _envelope_breaks(m: np.ndarray, p: np.ndarray, eta: float) -> np.ndarray:
    """Points where the MAP decision changes (upper envelope of lines)."""
    a = np.log(p) - 0.5 * m * m / eta
    b = m / eta
    pts = []
    for i in range(m.size):
        for k in range(i + 1, m.size):
            if b[i] != b[k]:
                pts.append((a[i] - a[k]) / (b[k] - b[i]))
    pts = np.asarray(pts, float)
    if pts.size == 0:
        return pts
    # keep only crossings that lie on the envelope
    vals = a[None, :] + b[None, :] * pts[:, None]
    top = vals.max(axis=1)
    on_env = np.sum(vals >= top[:, None] - 1e-9 * (1 + np.abs(top[:, None])), axis=1) >= 2
    return np.unique(pts[on_env])


def map_error(problem: HypothesisProblem, channel: GaussianChannel, quad: Optional[QuadratureSpec] = None) -> float:
    """Minimum error probability ``1 - int max_k p_k f(y | x + u_k) dy``.

    Evaluated as ``int (sum_k p_k f_k - max_k p_k f_k) dy`` by composite
    Simpson over the hull of the means widened by ``y_window_sigma`` noise
    standard deviations, split at the MAP decision boundaries and refined
    until successive estimates differ by less than 1e-9.
    """
    quad = quad or QuadratureSpec()
    p = problem.priors
    if np.any(p >= 1.0):
        return 0.0
    means = _collinear_projection(problem.means)
    keep = p > 0
    m, w = means[keep], p[keep]
    # hypotheses with identical means merge into one
    uniq, inv = np.unique(m, return_inverse=True)
    base = 0.0
    if uniq.size < m.size:
        # within a group of equal means only the heaviest can be declared
        groups = [w[inv == j] for j in range(uniq.size)]
        base = sum(g.sum() - g.max() for g in groups)
        m, w = uniq, np.array([g.max() for g in groups])
    if m.size == 1:
        return float(base)
    sd = math.sqrt(channel.eta)
    k = quad.y_window_sigma
    trunc = 2 * special.ndtr(-k) * w.sum()
    if trunc > MAP_TOL:
        raise SpecError(f"y window of {k} noise deviations truncates mass {trunc:.3g}")
    lo, hi = m.min() - k * sd, m.max() + k * sd
    breaks = _envelope_breaks(m, w, channel.eta)
    edges = np.unique(np.concatenate([[lo, hi], breaks[(breaks > lo) & (breaks < hi)]]))

    def integrand(y):
        dens = np.exp(-0.5 * ((y[:, None] - m[None, :]) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        return (w * dens).sum(axis=1) - (w * dens).max(axis=1)

    total = base
    converged = True
    tol = MAP_TOL / edges.size
    for a, b in zip(edges[:-1], edges[1:]):
        val, ok, _ = simpson_refine(integrand, a, b, tol, cap=quad.cap)
        total += val
        converged &= ok
    if not converged:
        warnings.warn("map_error: Simpson refinement hit the node cap", RuntimeWarning, stacklevel=2)
    return float(min(max(total, 0.0), 1.0 - p.max()))


def binary_gaussian_error(q0: float, q1: float, separation: float, eta: float) -> float:
    """Closed-form MAP error of two Gaussian hypotheses ``delta`` apart."""
    if not (q0 > 0 and q1 > 0):
        raise PreconditionError("binary_gaussian_error needs positive weights; use map_error for p_j = 1")
    if abs(q0 + q1 - 1.0) > 1e-12:
        raise PreconditionError("q0 + q1 must equal 1")
    if not (separation > 0 and eta > 0):
        raise PreconditionError("separation and eta must be positive")
    if math.isinf(separation):
        return 0.0
    s = math.sqrt(eta)
    half = separation / (2 * s)
    shift = s / separation * math.log(q0 / q1)
    return float(q0 * special.ndtr(-(half + shift)) + q1 * special.ndtr(-(half - shift)))


def high_noise_error(priors: Sequence[float]) -> float:
    """Error probability of the best blind guess, ``1 - max_k p_k``."""
    p = np.asarray(priors, float)
    if p.size < 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise PreconditionError("priors must be a probability vector")
    return float(1.0 - p.max())
