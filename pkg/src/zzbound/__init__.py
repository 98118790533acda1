"""Numerical Ziv-Zakai lower bounds on the MMSE under additive Gaussian noise.

The package evaluates the bound for scalar priors that may be continuous,
discrete or mixed, and for products of such priors. It also provides the
high- and low-noise asymptotics, a ground-truth MMSE oracle and grid-based
tightness checks.
"""

__version__ = "0.1.0"

from .asymptotics import (H_overlap, H_unimodal, HighNoiseReport, bernoulli_high_noise, high_noise_bound,
                          low_noise_slope, overlap_gap)
from .channel import GaussianChannel
from .errors import OutsideSupportError, PreconditionError, QuadratureError, SpecError, ZZBoundError
from .hypotest import HypothesisProblem, binary_gaussian_error, high_noise_error, map_error, priors_at
from .oracle import (CheckResult, PosteriorSlice, check_unimodal_symmetric, check_zz_condition, conditional_mean,
                     mmse_linear_gaussian, mmse_monte_carlo, mmse_quadrature, posterior)
from .prior import (ProductPrior, ScalarPrior, alignment_set, atoms, bernoulli, cdf_at, density_at, exponential,
                    gaussian, gaussian_mixture, logistic, mass_at, mixture, moments, prior_from_dict, sample,
                    tabulated, uniform)
from .quadrature import QuadratureSpec
from .zzb import BoundReport, h_scalar, valley_fill, zz_product, zz_scalar, zz_scalar_both

__all__ = [name for name in dir() if not name.startswith("_")]
