"""Dense complex matrix helpers for 2x2 and 4x4 systems.

Matrices are plain ``complex128`` numpy arrays. The eigensolver is cyclic
Jacobi (compiled when available, see :mod:`lindpinn.kernels`).
"""

import numpy as np

from . import kernels
from .errors import NotHermitian, ShapeMismatch

HERMITIAN_TOL = 1e-9


def as_matrix(m):
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def adjoint(m):
    return np.conj(np.swapaxes(m, -1, -2))


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def hermiticity_defect(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m - adjoint(m)))) if m.size else 0.0


def _check_hermitian(m, tol):
    defect = hermiticity_defect(m)
    if defect > tol:
        raise NotHermitian(f"max |m - m^H| = {defect:.3e} exceeds {tol:.1e}")


def hermitian_eigh(m, tol=HERMITIAN_TOL):
    """Ascending eigenvalues and eigenvector columns of a Hermitian matrix."""
    m = as_matrix(m)
    _check_hermitian(m, tol)
    w, v = kernels.eigh_batch(m[None])
    return w[0], v[0]


def hermitian_eigenvalues(m, tol=HERMITIAN_TOL):
    return hermitian_eigh(m, tol)[0]


def eigh_stack(ms, tol=HERMITIAN_TOL):
    """Batched version of :func:`hermitian_eigh` over a ``(B, n, n)`` stack."""
    ms = np.asarray(ms, dtype=np.complex128)
    if ms.ndim != 3 or ms.shape[1] != ms.shape[2]:
        raise ShapeMismatch(f"expected a (B, n, n) stack, got {ms.shape}")
    _check_hermitian(ms, tol)
    return kernels.eigh_batch(ms)


def frobenius_norm_sq(m):
    m = np.asarray(m)
    return float(np.sum(m.real**2 + m.imag**2))


def expm_series(a, tol=1e-12, max_terms=200):
    """Matrix exponential by the Taylor series, stopping once a term's norm < ``tol``.

    Used only as an independent reference in tests; the scaling step keeps
    the series well conditioned.
    """
    a = as_matrix(a)
    norm = np.sqrt(frobenius_norm_sq(a))
    squarings = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    a = a / 2**squarings
    result = np.eye(a.shape[0], dtype=np.complex128)
    term = result.copy()
    for k in range(1, max_terms):
        term = term @ a / k
        result = result + term
        if np.sqrt(frobenius_norm_sq(term)) < tol:
            break
    for _ in range(squarings):
        result = result @ result
    return result
