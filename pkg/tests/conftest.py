import numpy as np
import pytest

from fockinterp.genfun import sigma_lattice, sigma_over_linear
from fockinterp.lattice import CRITICAL_OMEGA, square_lattice
from fockinterp.weights import RadialWeight


@pytest.fixture(scope="session")
def w2():
    return RadialWeight.power(2.0)


@pytest.fixture(scope="session")
def lattice24(w2):
    return square_lattice(CRITICAL_OMEGA, 24.0, w2)


@pytest.fixture(scope="session")
def sigma24():
    return sigma_lattice(24.0)


@pytest.fixture(scope="session")
def sigma40():
    return sigma_lattice(40.0)


@pytest.fixture(scope="session")
def sigma_z40():
    return sigma_over_linear(40.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
