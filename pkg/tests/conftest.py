import json
from pathlib import Path

import pytest

from zzbound import prior as P

ORACLE_FILE = Path(__file__).parent / "oracles" / "derived_values.json"

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def derived():
    """Reference values frozen from tests/oracles/compute_oracles.py."""
    return json.loads(ORACLE_FILE.read_text())


def bimodal_mixture():
    return P.gaussian_mixture([0.5, 0.5], [-3.0, 3.0], [0.25, 0.25])


def prior_zoo():
    return {
        "gaussian": P.gaussian(0.0, 1.0),
        "uniform": P.uniform(0.0, 1.0),
        "exponential": P.exponential(1.0),
        "bimodal_mixture": bimodal_mixture(),
        "bernoulli_0.3": P.bernoulli(0.3),
        "symmetric_atoms": P.atoms([-1.0, 1.0], [0.5, 0.5]),
        "gauss_atom_mixture": P.mixture(0.5, P.gaussian(0.0, 1.0), P.atoms([0.0], [1.0])),
        "triangle_table": P.tabulated([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0]),
    }


ZOO_ETAS = (0.1, 0.5, 2.0, 8.0)


@pytest.fixture(scope="session")
def zoo():
    return prior_zoo()


@pytest.fixture
def acceptance_line():
    """Record a one-line verdict that is echoed in the terminal summary."""

    def record(number, passed, detail):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE_LINES.append((number, line))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
