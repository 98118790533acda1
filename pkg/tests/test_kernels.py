import importlib
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zzbound import _kernels_py, kernels
from zzbound.hypotest import HypothesisProblem, map_error
from zzbound.channel import GaussianChannel

compiled = pytest.importorskip("zzbound._kernels")


class TestBackends:
    def test_compiled_backend_selected(self):
        assert kernels.BACKEND == "cython"

    def test_env_forces_fallback(self):
        out = subprocess.run(
            [sys.executable, "-c", "from zzbound import kernels; print(kernels.BACKEND)"],
            env={"ZZB_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(2, 5)),
               elements=st.one_of(st.just(0.0), st.floats(1e-6, 3.0))),
        st.floats(0.01, 4.0), st.floats(0.01, 10.0),
    )
    def test_map_error_kernels_agree(self, q, t, eta):
        a = compiled.weighted_map_error(np.ascontiguousarray(q), t, eta)
        b = _kernels_py.weighted_map_error(q, t, eta)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_envelope_matches_simpson(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            M = int(rng.integers(2, 5))
            q = rng.uniform(0.05, 1.0, size=M)
            t, eta = rng.uniform(0.2, 2.0), rng.uniform(0.1, 3.0)
            env = kernels.weighted_map_error(q[None, :], t, eta)[0]
            quad = q.sum() * map_error(HypothesisProblem.scalar(0.0, t, q / q.sum()), GaussianChannel(eta))
            assert env == pytest.approx(quad, abs=1e-9)

    def test_posterior_moments_agree(self):
        rng = np.random.default_rng(1)
        x = np.sort(rng.normal(size=300))
        logw = rng.normal(size=300)
        y = rng.normal(size=50) * 2
        lo = rng.integers(0, 100, size=50)
        hi = lo + rng.integers(1, 200, size=50)
        a = compiled.posterior_moments(y, x, logw, lo.astype(np.int64), hi.astype(np.int64), 0.3)
        b = _kernels_py.posterior_moments(y, x, logw, lo, hi, 0.3)
        for u, v in zip(a, b):
            np.testing.assert_allclose(u, v, rtol=1e-11, atol=1e-14)

    def test_wrapper_rejects_vectors(self):
        with pytest.raises(ValueError):
            kernels.weighted_map_error(np.ones(3), 1.0, 1.0)
