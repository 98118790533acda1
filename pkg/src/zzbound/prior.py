"""Scalar and product priors: continuous, discrete and mixed laws.

A :class:`ScalarPrior` is the triple ``(alpha, continuous, atoms)`` with
``P = alpha * P_C + (1 - alpha) * P_D``. The continuous part is one of the
:class:`ContinuousLaw` families below; the discrete part is a finite list of
atoms. Values are immutable and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import PreconditionError, SpecError
from .quadrature import panel_rule

ATOM_TOL = 1e-12
RNG_NAME = "numpy.random.Generator(PCG64)"

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def _phi(z):
    return np.exp(-0.5 * z * z - _LOG_SQRT_2PI)


def _interval_mass(alpha, beta):
    """Phi(beta) - Phi(alpha) without cancellation in the upper tail."""
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    upper = alpha > 0
    out = np.where(upper, special.ndtr(-alpha) - special.ndtr(-beta), special.ndtr(beta) - special.ndtr(alpha))
    return np.maximum(out, 0.0)


def _zphi(z):
    # z * phi(z), with the limit 0 at +-inf
    z = np.asarray(z, float)
    with np.errstate(invalid="ignore"):
        out = z * _phi(z)
    return np.where(np.isfinite(z), out, 0.0)


def _z2phi(z):
    z = np.asarray(z, float)
    with np.errstate(invalid="ignore"):
        out = (z * z + 2.0) * _phi(z)
    return np.where(np.isfinite(z), out, 0.0)


def gaussian_interval_moments(mu, s, a, b, kmax=2):
    """Integrals of ``x**k * N(x; mu, s**2)`` over ``[a, b]`` for k <= kmax.

    ``a`` and ``b`` may be infinite. Returns a list ``[I0, ..., Ikmax]``.
    """
    mu = np.asarray(mu, float)
    alpha = (np.asarray(a, float) - mu) / s
    beta = (np.asarray(b, float) - mu) / s
    z0 = _interval_mass(alpha, beta)
    z1 = _phi(alpha) - _phi(beta)
    z2 = z0 + _zphi(alpha) - _zphi(beta)
    out = [z0, mu * z0 + s * z1, mu * mu * z0 + 2 * mu * s * z1 + s * s * z2]
    if kmax >= 3:
        z3 = _z2phi(alpha) - _z2phi(beta)
        out.append(mu**3 * z0 + 3 * mu**2 * s * z1 + 3 * mu * s * s * z2 + s**3 * z3)
    return out[: kmax + 1]


# ---------------------------------------------------------------------------
# continuous families
# ---------------------------------------------------------------------------


class ContinuousLaw:
    """Interface of an absolutely continuous scalar law.

    Subclasses provide ``pdf``, ``cdf``, the first two moments, sampling,
    and the geometry used by quadrature (breakpoints, window, feature
    scale).
    """

    family = "abstract"
    #: True when the density is known to be unimodal.
    unimodal: Optional[bool] = None

    def pdf(self, x):
        raise NotImplementedError

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def cdf(self, x):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def var(self) -> float:
        raise NotImplementedError

    @property
    def mode(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        """Finite points where the density is discontinuous or kinked."""
        return np.empty(0)

    def window(self) -> tuple:
        """Interval outside which the density is negligible (or zero)."""
        raise NotImplementedError

    @property
    def scale(self) -> float:
        """Length scale on which the density varies."""
        return math.sqrt(self.var)

    @property
    def compact(self) -> bool:
        return False

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params()}

    def gaussian_moments(self, y, eta: float):
        """``N_k(y) = int x**k f(x) phi_eta(y - x) dx`` for k = 0, 1, 2.

        The default evaluates the integrals by Gauss-Legendre panels over
        the window; families with Gaussian-conjugate structure override it
        with closed forms.
        """
        y = np.atleast_1d(np.asarray(y, float))
        lo, hi = self.window()
        width = min(self.scale, math.sqrt(eta)) / 4
        x, w = panel_rule(np.concatenate([[lo, hi], self.breakpoints()]), width, 8)
        wf = w * self.pdf(x)
        out = [np.empty_like(y) for _ in range(3)]
        step = max(1, 2_000_000 // max(1, x.size))
        for s in range(0, y.size, step):
            yy = y[s : s + step, None]
            k = wf[None, :] * np.exp(-0.5 * (yy - x[None, :]) ** 2 / eta) / math.sqrt(2 * math.pi * eta)
            out[0][s : s + step] = k.sum(axis=1)
            out[1][s : s + step] = (k * x).sum(axis=1)
            out[2][s : s + step] = (k * x * x).sum(axis=1)
        return out

    def shifted(self, c: float) -> "ContinuousLaw":
        if c == 0:
            return self
        return Shifted(self, c)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class Gaussian(ContinuousLaw):
    family = "gaussian"
    unimodal = True

    def __init__(self, mean: float = 0.0, var: float = 1.0):
        if not var > 0:
            raise SpecError("gaussian: var must be positive")
        self._mean = float(mean)
        self._var = float(var)
        self._sd = math.sqrt(self._var)

    def pdf(self, x):
        return _phi((np.asarray(x, float) - self._mean) / self._sd) / self._sd

    def logpdf(self, x):
        z = (np.asarray(x, float) - self._mean) / self._sd
        return -0.5 * z * z - _LOG_SQRT_2PI - math.log(self._sd)

    def cdf(self, x):
        return special.ndtr((np.asarray(x, float) - self._mean) / self._sd)

    @property
    def mean(self):
        return self._mean

    @property
    def var(self):
        return self._var

    @property
    def mode(self):
        return self._mean

    def sample(self, rng, n):
        return rng.normal(self._mean, self._sd, size=n)

    def window(self):
        return (self._mean - 12 * self._sd, self._mean + 12 * self._sd)

    def params(self):
        return {"mean": self._mean, "var": self._var}

    def gaussian_moments(self, y, eta):
        y = np.asarray(y, float)
        tot = self._var + eta
        n0 = _phi((y - self._mean) / math.sqrt(tot)) / math.sqrt(tot)
        mp = self._mean + self._var / tot * (y - self._mean)
        vp = self._var * eta / tot
        return [n0, n0 * mp, n0 * (mp * mp + vp)]


class Uniform(ContinuousLaw):
    family = "uniform"
    unimodal = True

    def __init__(self, a: float = 0.0, b: float = 1.0):
        if not b > a:
            raise SpecError("uniform: need a < b")
        self.a, self.b = float(a), float(b)

    def pdf(self, x):
        x = np.asarray(x, float)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def cdf(self, x):
        return np.clip((np.asarray(x, float) - self.a) / (self.b - self.a), 0.0, 1.0)

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    @property
    def var(self):
        return (self.b - self.a) ** 2 / 12.0

    @property
    def mode(self):
        return self.mean

    @property
    def compact(self):
        return True

    def sample(self, rng, n):
        return rng.uniform(self.a, self.b, size=n)

    def breakpoints(self):
        return np.array([self.a, self.b])

    def window(self):
        return (self.a, self.b)

    @property
    def scale(self):
        return self.b - self.a

    def params(self):
        return {"a": self.a, "b": self.b}

    def gaussian_moments(self, y, eta):
        y = np.asarray(y, float)
        m = gaussian_interval_moments(y, math.sqrt(eta), self.a, self.b)
        return [v / (self.b - self.a) for v in m]


class Exponential(ContinuousLaw):
    family = "exponential"
    unimodal = True

    def __init__(self, rate: float = 1.0):
        if not rate > 0:
            raise SpecError("exponential: rate must be positive")
        self.rate = float(rate)

    def pdf(self, x):
        x = np.asarray(x, float)
        with np.errstate(over="ignore"):
            return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def logpdf(self, x):
        x = np.asarray(x, float)
        return np.where(x >= 0, math.log(self.rate) - self.rate * x, -np.inf)

    def cdf(self, x):
        x = np.asarray(x, float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def var(self):
        return 1.0 / self.rate**2

    @property
    def mode(self):
        return 0.0

    def sample(self, rng, n):
        return rng.exponential(1.0 / self.rate, size=n)

    def breakpoints(self):
        return np.array([0.0])

    def window(self):
        return (0.0, 40.0 / self.rate)

    def params(self):
        return {"rate": self.rate}

    def gaussian_moments(self, y, eta):
        y = np.asarray(y, float)
        lam = self.rate
        mu = y - lam * eta
        scale = lam * np.exp(-lam * y + 0.5 * lam * lam * eta)
        m = gaussian_interval_moments(mu, math.sqrt(eta), 0.0, np.inf)
        return [scale * v for v in m]


class Logistic(ContinuousLaw):
    family = "logistic"
    unimodal = True

    def __init__(self, loc: float = 0.0, scale: float = 1.0):
        if not scale > 0:
            raise SpecError("logistic: scale must be positive")
        self.loc, self.s = float(loc), float(scale)

    def pdf(self, x):
        z = -np.abs((np.asarray(x, float) - self.loc) / self.s)
        e = np.exp(z)
        return e / (self.s * (1 + e) ** 2)

    def cdf(self, x):
        return special.expit((np.asarray(x, float) - self.loc) / self.s)

    @property
    def mean(self):
        return self.loc

    @property
    def var(self):
        return (math.pi * self.s) ** 2 / 3.0

    @property
    def mode(self):
        return self.loc

    @property
    def scale(self):
        return self.s

    def sample(self, rng, n):
        return rng.logistic(self.loc, self.s, size=n)

    def window(self):
        return (self.loc - 45 * self.s, self.loc + 45 * self.s)

    def params(self):
        return {"loc": self.loc, "scale": self.s}


class GaussianMixture(ContinuousLaw):
    family = "gaussian-mixture"

    def __init__(self, weights: Sequence[float], means: Sequence[float], vars: Sequence[float]):
        w = np.asarray(weights, float)
        m = np.asarray(means, float)
        v = np.asarray(vars, float)
        if not (w.ndim == m.ndim == v.ndim == 1 and w.size == m.size == v.size and w.size >= 1):
            raise SpecError("gaussian-mixture: weights, means, vars must be equal-length lists")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise SpecError("gaussian-mixture: weights must be positive and sum to 1")
        if np.any(v <= 0):
            raise SpecError("gaussian-mixture: vars must be positive")
        self.w, self.m, self.v = w, m, v
        self.sd = np.sqrt(v)
        self.unimodal = True if w.size == 1 else None

    def pdf(self, x):
        x = np.asarray(x, float)
        z = (x[..., None] - self.m) / self.sd
        return (self.w * _phi(z) / self.sd).sum(axis=-1)

    def logpdf(self, x):
        x = np.asarray(x, float)
        z = (x[..., None] - self.m) / self.sd
        return special.logsumexp(-0.5 * z * z - _LOG_SQRT_2PI, b=self.w / self.sd, axis=-1)

    def cdf(self, x):
        x = np.asarray(x, float)
        return (self.w * special.ndtr((x[..., None] - self.m) / self.sd)).sum(axis=-1)

    @property
    def mean(self):
        return float(self.w @ self.m)

    @property
    def var(self):
        return float(self.w @ (self.v + self.m**2) - self.mean**2)

    @property
    def mode(self):
        lo, hi = self.window()
        x = np.linspace(lo, hi, 20001)
        return float(x[np.argmax(self.pdf(x))])

    @property
    def scale(self):
        return float(self.sd.min())

    def sample(self, rng, n):
        comp = rng.choice(self.w.size, size=n, p=self.w)
        return rng.normal(self.m[comp], self.sd[comp])

    def window(self):
        return (float((self.m - 12 * self.sd).min()), float((self.m + 12 * self.sd).max()))

    def params(self):
        return {"weights": self.w.tolist(), "means": self.m.tolist(), "vars": self.v.tolist()}

    def gaussian_moments(self, y, eta):
        y = np.asarray(y, float)
        out = [np.zeros_like(y) for _ in range(3)]
        for wc, mc, vc in zip(self.w, self.m, self.v):
            for acc, part in zip(out, Gaussian(mc, vc).gaussian_moments(y, eta)):
                acc += wc * part
        return out


class Tabulated(ContinuousLaw):
    """Piecewise-linear density through the table, zero outside it."""

    family = "table"

    def __init__(self, xs: Sequence[float], fs: Sequence[float]):
        xs = np.asarray(xs, float)
        fs = np.asarray(fs, float)
        if xs.ndim != 1 or xs.size != fs.size or xs.size < 2:
            raise SpecError("table: need at least two (x, f) rows")
        if np.any(np.diff(xs) <= 0):
            raise SpecError("table: abscissae must be strictly increasing")
        if np.any(fs < 0) or not np.all(np.isfinite(fs)):
            raise SpecError("table: ordinates must be finite and nonnegative")
        total = float(np.trapezoid(fs, xs)) if hasattr(np, "trapezoid") else float(np.trapz(fs, xs))
        if abs(total - 1.0) > 1e-9:
            raise SpecError(f"table: density integrates to {total!r}, expected 1 +- 1e-9")
        self.xs, self.fs = xs, fs
        seg = 0.5 * (fs[1:] + fs[:-1]) * np.diff(xs)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self._cum /= self._cum[-1]
        d = np.sign(np.diff(fs))
        d = d[d != 0]
        self.unimodal = bool(np.sum(d[1:] != d[:-1]) <= 1 and (d.size == 0 or d[0] > 0 or np.all(d < 0)))

    def pdf(self, x):
        return np.interp(np.asarray(x, float), self.xs, self.fs, left=0.0, right=0.0)

    def cdf(self, x):
        x = np.asarray(x, float)
        j = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, self.xs.size - 2)
        d = np.clip(x - self.xs[j], 0.0, np.diff(self.xs)[j])
        slope = (self.fs[j + 1] - self.fs[j]) / (self.xs[j + 1] - self.xs[j])
        val = self._cum[j] + self.fs[j] * d + 0.5 * slope * d * d
        return np.where(x < self.xs[0], 0.0, np.where(x >= self.xs[-1], 1.0, val))

    def _raw_moment(self, k):
        total = 0.0
        for j in range(self.xs.size - 1):
            a, b = self.xs[j], self.xs[j + 1]
            s = (self.fs[j + 1] - self.fs[j]) / (b - a)
            c0 = self.fs[j] - s * a
            total += c0 * (b ** (k + 1) - a ** (k + 1)) / (k + 1) + s * (b ** (k + 2) - a ** (k + 2)) / (k + 2)
        return total

    @property
    def mean(self):
        return self._raw_moment(1)

    @property
    def var(self):
        return self._raw_moment(2) - self.mean**2

    @property
    def mode(self):
        return float(self.xs[np.argmax(self.fs)])

    @property
    def compact(self):
        return True

    @property
    def scale(self):
        return (self.xs[-1] - self.xs[0]) / 8

    def sample(self, rng, n):
        u = rng.random(n)
        j = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, self.xs.size - 2)
        r = u - self._cum[j]
        fj = self.fs[j]
        slope = (self.fs[j + 1] - fj) / (self.xs[j + 1] - self.xs[j])
        disc = np.sqrt(np.maximum(fj * fj + 2 * slope * r, 0.0))
        denom = fj + disc
        with np.errstate(invalid="ignore", divide="ignore"):
            d = np.where(denom > 0, 2 * r / denom, 0.0)
        return self.xs[j] + np.minimum(d, self.xs[j + 1] - self.xs[j])

    def breakpoints(self):
        return self.xs.copy()

    def window(self):
        return (float(self.xs[0]), float(self.xs[-1]))

    def params(self):
        return {}

    def to_dict(self):
        return {"table": np.column_stack([self.xs, self.fs]).tolist()}

    def __repr__(self):
        return f"Tabulated(n={self.xs.size}, support=[{self.xs[0]}, {self.xs[-1]}])"

    def gaussian_moments(self, y, eta):
        y = np.asarray(y, float)
        s = math.sqrt(eta)
        out = [np.zeros_like(y) for _ in range(3)]
        for j in range(self.xs.size - 1):
            a, b = self.xs[j], self.xs[j + 1]
            slope = (self.fs[j + 1] - self.fs[j]) / (b - a)
            c0 = self.fs[j] - slope * a
            m = gaussian_interval_moments(y, s, a, b, kmax=3)
            for k in range(3):
                out[k] += c0 * m[k] + slope * m[k + 1]
        return out


class Shifted(ContinuousLaw):
    """Law of ``X + c`` for a base law of ``X``."""

    family = "shifted"

    def __init__(self, base: ContinuousLaw, c: float):
        if isinstance(base, Shifted):
            base, c = base.base, base.c + c
        self.base, self.c = base, float(c)
        self.unimodal = base.unimodal

    def pdf(self, x):
        return self.base.pdf(np.asarray(x, float) - self.c)

    def logpdf(self, x):
        return self.base.logpdf(np.asarray(x, float) - self.c)

    def cdf(self, x):
        return self.base.cdf(np.asarray(x, float) - self.c)

    @property
    def mean(self):
        return self.base.mean + self.c

    @property
    def var(self):
        return self.base.var

    @property
    def mode(self):
        return self.base.mode + self.c

    @property
    def scale(self):
        return self.base.scale

    @property
    def compact(self):
        return self.base.compact

    def sample(self, rng, n):
        return self.base.sample(rng, n) + self.c

    def breakpoints(self):
        return self.base.breakpoints() + self.c

    def window(self):
        lo, hi = self.base.window()
        return (lo + self.c, hi + self.c)

    def params(self):
        return {"by": self.c, "base": self.base.to_dict()}

    def gaussian_moments(self, y, eta):
        n0, n1, n2 = self.base.gaussian_moments(np.asarray(y, float) - self.c, eta)
        return [n0, n1 + self.c * n0, n2 + 2 * self.c * n1 + self.c**2 * n0]


FAMILIES = {
    "gaussian": lambda p: Gaussian(p.get("mean", 0.0), p.get("var", 1.0)),
    "normal": lambda p: Gaussian(p.get("mean", 0.0), p.get("var", 1.0)),
    "uniform": lambda p: Uniform(p.get("a", 0.0), p.get("b", 1.0)),
    "exponential": lambda p: Exponential(p.get("rate", 1.0)),
    "logistic": lambda p: Logistic(p.get("loc", 0.0), p.get("scale", 1.0)),
    "gaussian-mixture": lambda p: GaussianMixture(p["weights"], p["means"], p["vars"]),
    "shifted": lambda p: continuous_from_dict(p["base"]).shifted(float(p["by"])),
}


def continuous_from_dict(d: dict) -> ContinuousLaw:
    if "table" in d:
        rows = np.asarray(d["table"], float)
        if rows.ndim != 2 or rows.shape[1] != 2:
            raise SpecError("table: expected a list of [x, f] pairs")
        return Tabulated(rows[:, 0], rows[:, 1])
    fam = d.get("family")
    if fam not in FAMILIES:
        raise SpecError(f"family: unknown continuous family {fam!r}")
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("params: expected an object")
    try:
        return FAMILIES[fam](params)
    except KeyError as exc:
        raise SpecError(f"params: {fam} is missing {exc.args[0]!r}") from exc


# ---------------------------------------------------------------------------
# scalar prior
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScalarPrior:
    """``alpha * continuous + (1 - alpha) * atoms``.

    Use the module-level constructors (:func:`gaussian`, :func:`atoms`,
    :func:`mixture`, ...) rather than building the triple by hand.
    """

    continuous: Optional[ContinuousLaw]
    locs: np.ndarray = field(default_factory=lambda: np.empty(0))
    masses: np.ndarray = field(default_factory=lambda: np.empty(0))
    alpha: float = 1.0

    def __post_init__(self):
        alpha = float(self.alpha)
        if not 0.0 <= alpha <= 1.0:
            raise SpecError("alpha must lie in [0, 1]")
        locs = np.asarray(self.locs, float).ravel()
        masses = np.asarray(self.masses, float).ravel()
        if locs.size != masses.size:
            raise SpecError("atoms: locations and masses differ in length")
        if alpha > 0 and self.continuous is None:
            raise SpecError("alpha > 0 requires a continuous part")
        if alpha < 1:
            if locs.size == 0:
                raise SpecError("alpha < 1 requires at least one atom")
            if np.any(masses <= 0):
                raise SpecError("atoms: masses must be positive")
            if abs(masses.sum() - 1.0) > 1e-12:
                raise SpecError(f"atoms: masses sum to {float(masses.sum())!r}, expected 1 +- 1e-12")
        order = np.argsort(locs, kind="stable")
        locs, masses = locs[order], masses[order]
        if locs.size > 1 and np.any(np.diff(locs) <= ATOM_TOL * np.maximum(1.0, np.abs(locs[1:]))):
            raise SpecError("atoms: locations must be distinct")
        locs.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "locs", locs)
        object.__setattr__(self, "masses", masses)
        if alpha == 0.0:
            object.__setattr__(self, "continuous", None)
        if alpha == 1.0:
            object.__setattr__(self, "locs", np.empty(0))
            object.__setattr__(self, "masses", np.empty(0))

    # -- structure --------------------------------------------------------

    @property
    def has_continuous(self) -> bool:
        return self.alpha > 0

    @property
    def has_atoms(self) -> bool:
        return self.alpha < 1

    @property
    def is_discrete(self) -> bool:
        return self.alpha == 0

    # -- evaluation -------------------------------------------------------

    def density(self, x):
        """``alpha * f_C(x)``; zero for purely discrete priors."""
        x = np.asarray(x, float)
        if not self.has_continuous:
            return np.zeros_like(x)
        return self.alpha * self.continuous.pdf(x)

    def log_density(self, x):
        x = np.asarray(x, float)
        if not self.has_continuous:
            return np.full_like(x, -np.inf)
        return math.log(self.alpha) + self.continuous.logpdf(x)

    def mass(self, x):
        """``(1 - alpha) * p_D(x)`` with atom matching at ``ATOM_TOL``."""
        x = np.asarray(x, float)
        if not self.has_atoms:
            return np.zeros_like(x)
        locs = self.locs
        idx = np.searchsorted(locs, x)
        out = np.zeros(x.shape)
        for cand in (idx - 1, idx):
            ok = (cand >= 0) & (cand < locs.size)
            c = np.clip(cand, 0, locs.size - 1)
            hit = ok & (np.abs(locs[c] - x) <= ATOM_TOL * np.maximum(1.0, np.abs(x)))
            out = np.where(hit & (out == 0), self.masses[c], out)
        return (1.0 - self.alpha) * out

    def cdf(self, x):
        x = np.asarray(x, float)
        out = np.zeros(x.shape)
        if self.has_continuous:
            out = out + self.alpha * self.continuous.cdf(x)
        if self.has_atoms:
            cum = np.concatenate([[0.0], np.cumsum(self.masses)])
            idx = np.searchsorted(self.locs, x + ATOM_TOL * np.maximum(1.0, np.abs(x)), side="right")
            out = out + (1.0 - self.alpha) * cum[idx]
        return np.clip(out, 0.0, 1.0)

    def moments(self):
        """``(mean, variance)`` of the mixed law."""
        m1 = m2 = 0.0
        if self.has_continuous:
            c = self.continuous
            m1 += self.alpha * c.mean
            m2 += self.alpha * (c.var + c.mean**2)
        if self.has_atoms:
            m1 += (1 - self.alpha) * float(self.masses @ self.locs)
            m2 += (1 - self.alpha) * float(self.masses @ self.locs**2)
        return m1, max(m2 - m1 * m1, 0.0)

    @property
    def mean(self) -> float:
        return self.moments()[0]

    @property
    def var(self) -> float:
        return self.moments()[1]

    @property
    def std(self) -> float:
        return math.sqrt(self.var)

    def sample(self, count: int, seed: int) -> np.ndarray:
        """Deterministic draws from ``numpy.random.default_rng(seed)``."""
        if count < 1:
            raise PreconditionError("count must be at least 1")
        rng = np.random.default_rng(seed)
        if not self.has_atoms:
            return np.asarray(self.continuous.sample(rng, count), float)
        if not self.has_continuous:
            return rng.choice(self.locs, size=count, p=self.masses)
        from_cont = rng.random(count) < self.alpha
        out = rng.choice(self.locs, size=count, p=self.masses)
        k = int(from_cont.sum())
        if k:
            out[from_cont] = self.continuous.sample(rng, k)
        return out

    def gaussian_moments(self, y, eta: float):
        """``int x**k phi_eta(y - x) dP(x)`` for k = 0, 1, 2 (mixed measure)."""
        y = np.asarray(y, float)
        out = [np.zeros(y.shape) for _ in range(3)]
        if self.has_continuous:
            for acc, part in zip(out, self.continuous.gaussian_moments(y, eta)):
                acc += self.alpha * np.reshape(part, y.shape)
        if self.has_atoms:
            k = self.masses * _phi((y[..., None] - self.locs) / math.sqrt(eta)) / math.sqrt(eta)
            k *= 1 - self.alpha
            out[0] += k.sum(axis=-1)
            out[1] += (k * self.locs).sum(axis=-1)
            out[2] += (k * self.locs**2).sum(axis=-1)
        return out

    # -- geometry used by quadrature -------------------------------------

    def support_hull(self):
        """Interval containing all atoms and the continuous window."""
        lo, hi = math.inf, -math.inf
        if self.has_continuous:
            lo, hi = self.continuous.window()
        if self.has_atoms:
            lo, hi = min(lo, self.locs[0]), max(hi, self.locs[-1])
        return float(lo), float(hi)

    @property
    def span(self) -> float:
        """Width of the compact part of the support (atoms, compact densities)."""
        pts = []
        if self.has_atoms:
            pts += [self.locs[0], self.locs[-1]]
        if self.has_continuous and self.continuous.compact:
            pts += list(self.continuous.window())
        return float(max(pts) - min(pts)) if pts else 0.0

    @property
    def scale(self) -> float:
        if self.has_continuous:
            return float(self.continuous.scale)
        if self.locs.size > 1:
            return float(np.diff(self.locs).min())
        return 1.0

    def alignment_set(self, M: int) -> np.ndarray:
        """Shift scales t > 0 at which shifted atom sets can intersect.

        All ``(x_w - x_z) / g`` with ``x_w > x_z`` atoms and gaps
        ``g = 1, ..., M - 1``, deduplicated at ``ATOM_TOL``.
        """
        if not self.has_atoms:
            raise PreconditionError("alignment_set needs a prior with atoms")
        if M < 2:
            raise PreconditionError("M must be at least 2")
        d = self.locs[:, None] - self.locs[None, :]
        d = d[d > 0]
        if d.size == 0:
            return np.empty(0)
        t = np.sort((d[:, None] / np.arange(1, M)[None, :]).ravel())
        keep = np.concatenate([[True], np.diff(t) > ATOM_TOL * np.maximum(1.0, t[1:])])
        return t[keep]

    # -- transforms, serialisation ---------------------------------------

    def shifted(self, c: float) -> "ScalarPrior":
        cont = self.continuous.shifted(c) if self.has_continuous else None
        locs = self.locs + c if self.has_atoms else self.locs
        return ScalarPrior(cont, locs, self.masses, self.alpha)

    def centered(self) -> "ScalarPrior":
        return self.shifted(-self.mean)

    def to_dict(self) -> dict:
        atom_rows = np.column_stack([self.locs, self.masses]).tolist()
        if self.alpha == 1.0:
            return self.continuous.to_dict()
        if self.alpha == 0.0:
            return {"atoms": atom_rows}
        return {"mixture": {"alpha": self.alpha, "continuous": self.continuous.to_dict(), "atoms": atom_rows}}

    def __repr__(self):
        parts = []
        if self.has_continuous:
            parts.append(f"{self.alpha:g}*{self.continuous!r}")
        if self.has_atoms:
            atoms_txt = ", ".join(f"({x:g}, {p:g})" for x, p in zip(self.locs, self.masses))
            parts.append(f"{1 - self.alpha:g}*atoms[{atoms_txt}]")
        return "ScalarPrior(" + " + ".join(parts) + ")"


@dataclass(frozen=True, eq=False)
class ProductPrior:
    """Independent coordinates ``P_X = prod_i P_{X_i}``."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if len(factors) < 1:
            raise SpecError("product: need at least one factor")
        for f in factors:
            if not isinstance(f, ScalarPrior):
                raise SpecError("product: every factor must be a ScalarPrior")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        return len(self.factors)

    def density(self, x):
        x = np.asarray(x, float)
        out = np.ones(x.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out * (f.density(x[..., i]) + f.mass(x[..., i]))
        return out

    def moments(self):
        m = [f.moments() for f in self.factors]
        return np.array([a for a, _ in m]), np.array([b for _, b in m])

    def sample(self, count: int, seed: int) -> np.ndarray:
        seeds = np.random.SeedSequence(seed).spawn(self.dim)
        cols = [f.sample(count, int(s.generate_state(1)[0])) for f, s in zip(self.factors, seeds)]
        return np.column_stack(cols)

    def to_dict(self) -> dict:
        return {"product": [f.to_dict() for f in self.factors]}


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def from_continuous(law: ContinuousLaw) -> ScalarPrior:
    return ScalarPrior(law, alpha=1.0)


def gaussian(mean: float = 0.0, var: float = 1.0) -> ScalarPrior:
    return ScalarPrior(Gaussian(mean, var))


def uniform(a: float = 0.0, b: float = 1.0) -> ScalarPrior:
    return ScalarPrior(Uniform(a, b))


def exponential(rate: float = 1.0) -> ScalarPrior:
    return ScalarPrior(Exponential(rate))


def logistic(loc: float = 0.0, scale: float = 1.0) -> ScalarPrior:
    return ScalarPrior(Logistic(loc, scale))


def gaussian_mixture(weights, means, vars) -> ScalarPrior:
    return ScalarPrior(GaussianMixture(weights, means, vars))


def tabulated(xs, fs) -> ScalarPrior:
    return ScalarPrior(Tabulated(xs, fs))


def atoms(locs, masses) -> ScalarPrior:
    return ScalarPrior(None, locs, masses, alpha=0.0)


def bernoulli(p: float) -> ScalarPrior:
    if not 0.0 < p < 1.0:
        raise SpecError("bernoulli: p must lie in (0, 1)")
    return atoms([0.0, 1.0], [1.0 - p, p])


def mixture(alpha: float, continuous: ScalarPrior, discrete: ScalarPrior) -> ScalarPrior:
    """``alpha * continuous + (1 - alpha) * discrete``."""
    if continuous.has_atoms or discrete.has_continuous:
        raise SpecError("mixture: expects a purely continuous and a purely discrete prior")
    return ScalarPrior(continuous.continuous, discrete.locs, discrete.masses, alpha)


def _atoms_from_rows(rows, where="atoms"):
    try:
        arr = np.asarray(rows, float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: expected a list of [x, p] pairs") from exc
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise SpecError(f"{where}: expected a non-empty list of [x, p] pairs")
    return arr[:, 0], arr[:, 1]


def prior_from_dict(d: dict):
    """Build a :class:`ScalarPrior` or :class:`ProductPrior` from its JSON form."""
    if not isinstance(d, dict):
        raise SpecError("prior: expected a JSON object")
    if "product" in d:
        items = d["product"]
        if not isinstance(items, list) or not items:
            raise SpecError("product: expected a non-empty list of priors")
        factors = []
        for i, item in enumerate(items):
            p = prior_from_dict(item)
            if isinstance(p, ProductPrior):
                raise SpecError(f"product[{i}]: nested products are not supported")
            factors.append(p)
        return ProductPrior(tuple(factors))
    if "atoms" in d:
        return atoms(*_atoms_from_rows(d["atoms"]))
    if "mixture" in d:
        mx = d["mixture"]
        if not isinstance(mx, dict) or not {"alpha", "continuous", "atoms"} <= set(mx):
            raise SpecError("mixture: needs alpha, continuous and atoms")
        locs, masses = _atoms_from_rows(mx["atoms"], "mixture.atoms")
        return ScalarPrior(continuous_from_dict(mx["continuous"]), locs, masses, float(mx["alpha"]))
    if d.get("family") == "bernoulli":
        return bernoulli(float(d.get("params", {}).get("p", 0.5)))
    return ScalarPrior(continuous_from_dict(d))


# module-level names for the operations
def density_at(prior: ScalarPrior, x):
    return prior.density(x)


def mass_at(prior: ScalarPrior, x):
    return prior.mass(x)


def cdf_at(prior: ScalarPrior, x):
    return prior.cdf(x)


def moments(prior: ScalarPrior):
    return prior.moments()


def sample(prior, count: int, seed: int):
    return prior.sample(count, seed)


def alignment_set(prior: ScalarPrior, M: int):
    return prior.alignment_set(M)
