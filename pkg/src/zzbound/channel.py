"""Additive Gaussian observation channel ``Y = X + N`` with ``N ~ N(0, eta I)``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, SpecError


@dataclass(frozen=True)
class GaussianChannel:
    """Gaussian noise of variance ``eta`` per coordinate in dimension ``dim``.

    The channel contract is ``likelihood``, ``observe`` and ``noise_level``;
    other noise laws can implement the same three members.
    """

    eta: float
    dim: int = 1

    def __post_init__(self):
        eta = float(self.eta)
        if not (eta > 0 and math.isfinite(eta)):
            raise SpecError("eta must be a positive finite number")
        if int(self.dim) != self.dim or self.dim < 1:
            raise SpecError("dim must be a positive integer")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def noise_level(self) -> float:
        return self.eta

    @property
    def sigma(self) -> float:
        return math.sqrt(self.eta)

    def _check(self, v, name):
        v = np.asarray(v, float)
        if self.dim == 1 and v.ndim == 0:
            return v.reshape(1)
        if v.shape[-1:] != (self.dim,):
            raise PreconditionError(f"{name} has dimension {v.shape[-1:] or 0}, channel expects {self.dim}")
        return v

    def log_likelihood(self, y, x):
        y = self._check(y, "y")
        x = self._check(x, "x")
        r = y - x
        return -0.5 * np.sum(r * r, axis=-1) / self.eta - 0.5 * self.dim * math.log(2 * math.pi * self.eta)

    def likelihood(self, y, x):
        """Conditional density ``f_{Y|X}(y | x)``."""
        return np.exp(self.log_likelihood(y, x))

    def observe(self, x, seed: int):
        """One noisy observation of ``x`` (or of each row of a batch)."""
        x = self._check(x, "x")
        rng = np.random.default_rng(seed)
        return x + rng.normal(0.0, self.sigma, size=x.shape)

    def to_dict(self) -> dict:
        return {"channel": "gaussian", "eta": self.eta, "dim": self.dim}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianChannel":
        if not isinstance(d, dict):
            raise SpecError("channel: expected a JSON object")
        kind = d.get("channel", "gaussian")
        if kind != "gaussian":
            raise SpecError(f"channel: unsupported channel {kind!r}")
        if "eta" not in d:
            raise SpecError("channel.eta: missing")
        return cls(float(d["eta"]), int(d.get("dim", 1)))

    @classmethod
    def from_json(cls, text: str) -> "GaussianChannel":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpecError(f"channel: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def likelihood(channel: GaussianChannel, y, x):
    return channel.likelihood(y, x)


def observe(channel: GaussianChannel, x, seed: int):
    return channel.observe(x, seed)
