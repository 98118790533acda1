import json

import numpy as np
import pytest

from zzbound import prior as P
from zzbound.channel import GaussianChannel
from zzbound.errors import PreconditionError
from zzbound.oracle import (check_unimodal_symmetric, check_zz_condition, conditional_mean, mmse_linear_gaussian,
                            mmse_monte_carlo, mmse_quadrature, posterior)
from zzbound.zzb import zz_scalar

from conftest import bimodal_mixture, prior_zoo


class TestPosterior:
    def test_single_atom(self):
        for y in (-3.0, 0.0, 5.0):
            s = posterior(P.atoms([1.5], [1.0]), GaussianChannel(1.0), y)
            np.testing.assert_allclose(s.atom_posteriors, [1.0])
            assert s.conditional_mean == 1.5

    def test_symmetric_bernoulli(self):
        s = posterior(P.bernoulli(0.5), GaussianChannel(1.0), 0.5)
        np.testing.assert_allclose(s.atom_posteriors, [0.5, 0.5], atol=1e-15)

    @pytest.mark.parametrize("name", list(prior_zoo()))
    def test_normalised_and_consistent(self, name):
        pr = prior_zoo()[name]
        ch = GaussianChannel(0.3)
        for y in (-1.0, 0.4, 2.0):
            s = posterior(pr, ch, y)
            assert s.total_mass == pytest.approx(1.0, abs=1e-10)
            assert s.first_moment == pytest.approx(s.conditional_mean, abs=1e-12)
            assert float(conditional_mean(pr, ch, y)) == pytest.approx(s.conditional_mean, abs=1e-8)
            assert s.variance >= 0

    def test_small_noise_does_not_underflow(self):
        s = posterior(P.gaussian(0, 1), GaussianChannel(1e-8), 2.0)
        assert s.conditional_mean == pytest.approx(2.0 / (1 + 1e-8), abs=1e-8)


class TestMMSE:
    def test_gaussian(self):
        assert mmse_quadrature(P.gaussian(0, 1), GaussianChannel(1.0)) == pytest.approx(0.5, abs=1e-6)

    def test_known_estimand(self):
        assert mmse_quadrature(P.atoms([3.0], [1.0]), GaussianChannel(2.0)) == 0.0
        assert mmse_monte_carlo(P.atoms([3.0], [1.0]), GaussianChannel(2.0), 10**4, 1) == (0.0, 0.0)

    def test_bernoulli_high_noise(self):
        assert 0.205 <= mmse_quadrature(P.bernoulli(0.3), GaussianChannel(100.0)) <= 0.210

    def test_monte_carlo_gaussian(self):
        est, se = mmse_monte_carlo(P.gaussian(0, 1), GaussianChannel(1.0), 10**6, 17)
        assert abs(est - 0.5) <= 5 * se

    def test_monte_carlo_deterministic(self):
        pr, ch = P.exponential(1.0), GaussianChannel(0.5)
        assert mmse_monte_carlo(pr, ch, 5000, 3) == mmse_monte_carlo(pr, ch, 5000, 3)

    def test_monte_carlo_needs_samples(self):
        with pytest.raises(PreconditionError):
            mmse_monte_carlo(P.gaussian(), GaussianChannel(1.0), 10, 0)

    @pytest.mark.parametrize("args, expected", [((1, 1), 0.5), ((4, 1), 0.8), ((1, 1e-9), 1e-9)])
    def test_linear_gaussian(self, args, expected):
        assert mmse_linear_gaussian(*args) == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("name", list(prior_zoo()))
    def test_below_variance_and_monotone(self, name):
        pr = prior_zoo()[name]
        vals = np.array([mmse_quadrature(pr, GaussianChannel(e)) for e in np.geomspace(0.05, 20, 20)])
        assert np.all(vals <= pr.var + 1e-9)
        assert np.all(np.diff(vals) >= -1e-9)


class TestCheckers:
    def test_gaussian_passes(self):
        ch = GaussianChannel(1.0)
        assert check_unimodal_symmetric(P.gaussian(0, 1), ch).passed
        assert check_zz_condition(P.gaussian(0, 1), ch, [0.25, 1.0, 3.0], M=2).passed
        assert check_zz_condition(P.gaussian(0, 1), ch, [0.5], M=3).passed

    def test_skewed_prior_fails_symmetry(self):
        r = check_unimodal_symmetric(P.exponential(1.0), GaussianChannel(0.5))
        assert not r.passed
        assert r.counterexample["reason"] == "not symmetric" and r.counterexample["asymmetry"] > 1e-3

    def test_bimodal_posterior(self):
        ch = GaussianChannel(0.1)
        r = check_unimodal_symmetric(bimodal_mixture(), ch)
        assert not r.passed and r.counterexample["reason"] == "not unimodal"
        z = check_zz_condition(bimodal_mixture(), ch, [0.25, 0.5, 1.0], M=2)
        assert not z.passed
        ce = z.counterexample
        assert set(ce) == {"t", "x", "y", "argmax_set", "argmin_set"}
        assert not set(ce["argmax_set"]) & set(ce["argmin_set"])

    def test_exact_tie_counts_as_intersection(self):
        # x and x + t straddle the posterior mean symmetrically
        pr, ch = P.gaussian(0, 1), GaussianChannel(1.0)
        y, t = 1.0, 0.8
        m = float(conditional_mean(pr, ch, y))
        r = check_zz_condition(pr, ch, [t], M=2, x_grid=[m - t / 2], y_grid=[y])
        assert r.passed

    def test_serialization(self):
        r = check_zz_condition(bimodal_mixture(), GaussianChannel(0.1), [0.25])
        d = json.loads(r.to_json())
        assert set(d) == {"pass", "counterexample", "grid_echo"} and d["pass"] is False
        ok = json.loads(check_unimodal_symmetric(P.gaussian(), GaussianChannel(1.0)).to_json())
        assert ok["counterexample"] is None and ok["grid_echo"]["x_nodes"] == 257

    def test_atoms_rejected_by_shape_check(self):
        with pytest.raises(PreconditionError):
            check_unimodal_symmetric(P.bernoulli(0.3), GaussianChannel(1.0))

    def test_tightness_when_checks_pass(self):
        pr, ch = P.gaussian(0, 1), GaussianChannel(0.5)
        assert check_unimodal_symmetric(pr, ch).passed
        zz = zz_scalar(pr, ch, 2, with_valley_fill=False).value
        assert abs(zz - mmse_quadrature(pr, ch)) <= 1e-6
