import sys

import numpy as np
import pytest

from lindpinn import _fallback, kernels


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_state(rng, n, rank=None):
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def _backends():
    out = [pytest.param(_fallback, id="python")]
    if kernels.BACKEND == "cython":
        from lindpinn import _kernels

        out.append(pytest.param(_kernels, id="cython"))
    return out


BACKENDS = _backends()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
