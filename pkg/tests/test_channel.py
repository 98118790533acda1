import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from zzbound.channel import GaussianChannel, likelihood, observe
from zzbound.errors import PreconditionError, SpecError


class TestLikelihood:
    def test_standard_peak(self, derived):
        assert likelihood(GaussianChannel(1.0), 0.0, 0.0) == pytest.approx(derived["std_normal_peak"], rel=1e-12)

    def test_two_dimensional_peak(self, derived):
        ch = GaussianChannel(0.25, dim=2)
        assert ch.likelihood([0.0, 0.0], [0.0, 0.0]) == pytest.approx(derived["likelihood_d2_eta025"], rel=1e-12)

    @pytest.mark.parametrize("eta", [1e-3, 0.25, 1.0, 40.0])
    def test_integrates_to_one(self, eta):
        ch = GaussianChannel(eta)
        s = ch.sigma
        val = integrate.quad(lambda y: float(ch.likelihood(y, 0.3)), 0.3 - 10 * s, 0.3 + 10 * s,
                             epsabs=1e-12, points=[0.3])[0]
        assert val == pytest.approx(1.0, abs=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-50, 50), st.floats(-5, 5), st.floats(-50, 50), st.floats(0.01, 10))
    def test_translation_invariance(self, x, d, shift, eta):
        ch = GaussianChannel(eta)
        a = ch.likelihood(x + d, x)
        b = ch.likelihood(x + shift + d, x + shift)
        np.testing.assert_allclose(a, b, rtol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(PreconditionError):
            GaussianChannel(1.0, dim=2).likelihood([0.0], [0.0, 0.0])


class TestObserve:
    def test_tiny_noise(self):
        ch = GaussianChannel(1e-12)
        x = np.linspace(-3, 3, 101)
        assert np.all(np.abs(ch.observe(x[:, None], 5)[:, 0] - x) < 1e-4)

    def test_deterministic(self):
        ch = GaussianChannel(2.0)
        np.testing.assert_array_equal(observe(ch, np.zeros((10, 1)), 9), observe(ch, np.zeros((10, 1)), 9))

    def test_variance(self, derived):
        lo, hi = derived["gauss_var_interval"]
        y = GaussianChannel(1.0).observe(np.zeros((10**6, 1)), 3)
        assert lo <= y.var() <= hi


class TestSpec:
    def test_round_trip(self):
        ch = GaussianChannel(0.5, 3)
        assert GaussianChannel.from_json(json.dumps(ch.to_dict())) == ch

    def test_noise_level(self):
        assert GaussianChannel(0.7).noise_level == 0.7

    @pytest.mark.parametrize("eta", [0.0, -1.0, float("inf"), float("nan")])
    def test_rejects_bad_eta(self, eta):
        with pytest.raises(SpecError):
            GaussianChannel(eta)

    def test_rejects_other_channel(self):
        with pytest.raises(SpecError, match="unsupported"):
            GaussianChannel.from_dict({"channel": "poisson", "eta": 1})

    def test_bad_json(self):
        with pytest.raises(SpecError, match="line"):
            GaussianChannel.from_json("{\"eta\": }")
