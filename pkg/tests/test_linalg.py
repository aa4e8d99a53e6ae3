import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindpinn.errors import NotHermitian
from lindpinn.linalg import (
    adjoint,
    eigh_stack,
    expm_series,
    frobenius_norm_sq,
    hermitian_eigenvalues,
    kron,
)
from lindpinn.quantum import I2, SX, SZ

from conftest import random_hermitian


def test_kron_examples():
    np.testing.assert_array_equal(kron(I2, I2), np.eye(4))
    np.testing.assert_array_equal(kron(SZ, I2), np.diag([1, 1, -1, -1]))
    np.testing.assert_array_equal(kron(SX, SX), np.fliplr(np.eye(4)))


def test_kron_entrywise_definition(rng):
    a = rng.integers(-3, 4, size=(2, 2)) + 1j * rng.integers(-3, 4, size=(2, 2))
    b = rng.integers(-3, 4, size=(2, 2)) + 1j * rng.integers(-3, 4, size=(2, 2))
    k = kron(a, b)
    for i, j, p, q in np.ndindex(2, 2, 2, 2):
        assert k[i * 2 + p, j * 2 + q] == a[i, j] * b[p, q]


def test_kron_associative_on_integer_matrices(rng):
    a, b, c = (rng.integers(-2, 3, size=(2, 2)).astype(complex) for _ in range(3))
    np.testing.assert_array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_adjoint_involution(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.array_equal(adjoint(adjoint(m)), m)


@pytest.mark.parametrize(
    "m, expected",
    [
        (np.diag([3.0, 1.0]), [1.0, 3.0]),
        (SX, [-1.0, 1.0]),
        # roots of l^2 - 4 l + 3
        (np.array([[2.0, 1.0], [1.0, 2.0]]), [1.0, 3.0]),
    ],
)
def test_hermitian_eigenvalue_examples(m, expected):
    np.testing.assert_allclose(hermitian_eigenvalues(m), expected, atol=1e-14)


def test_not_hermitian_rejected():
    with pytest.raises(NotHermitian):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NotHermitian):
        eigh_stack(np.array([[[0, 1e-6], [0, 0]]]))


def test_frobenius_examples():
    assert frobenius_norm_sq(np.zeros((2, 2))) == 0.0
    assert frobenius_norm_sq(I2) == 2.0
    assert frobenius_norm_sq(SX) == 2.0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([2, 3, 4]), scale=st.floats(0.1, 10))
def test_spectral_identities(seed, n, scale):
    m = random_hermitian(np.random.default_rng(seed), n, scale)
    w = hermitian_eigenvalues(m)
    assert abs(w.sum() - np.trace(m).real) < 1e-9
    assert abs((w**2).sum() - frobenius_norm_sq(m)) < 1e-8 * max(1.0, scale**2)


def test_expm_series_matches_eigendecomposition(rng):
    g = random_hermitian(rng, 4)
    w, v = np.linalg.eigh(g)
    ref = v @ np.diag(np.exp(-1j * w)) @ v.conj().T
    np.testing.assert_allclose(expm_series(-1j * g), ref, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([2, 4]))
def test_eigenvalues_unitarily_invariant(seed, n):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, n)
    u = expm_series(-1j * random_hermitian(rng, n))
    np.testing.assert_allclose(
        hermitian_eigenvalues(u @ m @ u.conj().T, tol=1e-8), hermitian_eigenvalues(m), atol=1e-8
    )
