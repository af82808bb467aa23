import numpy as np
import pytest

from rulecraft.core import Dataset, OrthoBasis, extend_basis
from rulecraft.kernels import available_backends

ALPHA, EPS = 1000.0, 0.01


@pytest.fixture
def fig2():
    return Dataset(np.array([1.0, 2.0, 3.0]), np.array([-10.0, -6.0, 5.0]))


@pytest.fixture
def fig2_state():
    """Basis and gradient after the first rule (rows 1, 2, weight -8)."""
    basis = OrthoBasis(3)
    extend_basis(basis, np.array([1.0, 1.0, 0.0]))
    return basis, np.array([2.0, -2.0, -5.0])


def prop2_data(alpha=ALPHA, eps=EPS):
    y = np.array([-alpha - eps, alpha, -3 * alpha - eps, alpha + eps, 2 * alpha + eps])
    return Dataset(np.arange(1.0, 6.0), y)


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


def random_basis(rng, n, t):
    basis = OrthoBasis(n)
    for _ in range(t):
        extend_basis(basis, (rng.random(n) < 0.5).astype(float))
    return basis


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
