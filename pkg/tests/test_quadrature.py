import math

import numpy as np
import pytest

from zzbound.errors import SpecError
from zzbound.quadrature import QuadratureSpec, node_cap, panel_rule, simpson, simpson_refine


class TestRules:
    def test_panel_rule_integrates_polynomials_exactly(self):
        x, w = panel_rule([0.0, 0.3, 2.0], 0.5, 8)
        assert w @ x**15 == pytest.approx(2.0**16 / 16, rel=1e-13)

    def test_panel_rule_avoids_breakpoints(self):
        x, _ = panel_rule([0.0, 1.0, 2.0], 10.0, 4)
        assert not np.any(np.isin(x, [0.0, 1.0, 2.0]))

    def test_simpson_exact_on_cubics(self):
        x = np.linspace(0, 2, 5)
        assert simpson(x**3, 0.5) == pytest.approx(4.0)

    def test_simpson_needs_odd_count(self):
        with pytest.raises(ValueError):
            simpson(np.ones(4), 1.0)

    def test_simpson_refine_converges(self):
        val, ok, n = simpson_refine(np.sin, 0.0, math.pi, 1e-12)
        assert ok and val == pytest.approx(2.0, abs=1e-11) and n > 65

    def test_simpson_refine_reports_cap(self):
        _, ok, n = simpson_refine(lambda x: np.abs(x - 0.3) ** 0.5, 0.0, 1.0, 1e-15, cap=1000)
        assert not ok and n <= 1000


class TestSpec:
    def test_defaults(self):
        q = QuadratureSpec()
        assert q.t_nodes == 64 and q.y_window_sigma == 10 and q.refine_tol == 1e-7

    def test_validation(self):
        with pytest.raises(SpecError):
            QuadratureSpec(t_max=-1)
        with pytest.raises(SpecError):
            QuadratureSpec(t_max=2, extra_t_nodes=(3.0,))
        with pytest.raises(SpecError):
            QuadratureSpec(x_window=(1, 0))

    def test_node_cap_env(self, monkeypatch):
        monkeypatch.setenv("ZZB_NODE_CAP", "4096")
        assert node_cap() == 4096 and QuadratureSpec().cap == 4096
        monkeypatch.setenv("ZZB_NODE_CAP", "lots")
        with pytest.raises(SpecError):
            node_cap()

    def test_to_dict(self):
        d = QuadratureSpec(extra_t_nodes=(1.0,)).to_dict()
        assert d["extra_t_nodes"] == [1.0] and d["node_cap"] == 2**20
