"""Pauli bases, density matrices, the Lindblad generator and concurrence.

Two-qubit basis labels are pairs over ``I, X, Y, Z`` in lexicographic order
with ``II`` removed, the first letter acting on qubit 1::

    IX IY IZ XI XX XY XZ YI YX YY YZ ZI ZX ZY ZZ

Local observables also accept the aliases ``X1 = XI``, ``Z2 = IZ`` and so on.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import (
    BadSite,
    DimMismatch,
    LabelUnknown,
    LengthMismatch,
    NegativeRate,
    NotHermitian,
    NotState,
    UnsupportedSize,
)
from .linalg import adjoint, eigh_stack, hermiticity_defect, kron

I2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
# lowering operator |0><1|
SM = np.array([[0, 1], [0, 0]], dtype=np.complex128)

PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


@dataclass(frozen=True)
class PauliBasis:
    n_qubits: int
    labels: tuple
    operators: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return 2**self.n_qubits

    @property
    def size(self):
        return len(self.labels)

    def canonical(self, label):
        if label in self.labels:
            return label
        if self.n_qubits == 2 and len(label) == 2 and label[1] in "12" and label[0] in "XYZ":
            return label[0] + "I" if label[1] == "1" else "I" + label[0]
        raise LabelUnknown(f"unknown observable label {label!r}")

    def index(self, label):
        return self.labels.index(self.canonical(label))

    def operator(self, label):
        return self.operators[self.index(label)]


_BASES = {}


def pauli_basis(n_qubits):
    if n_qubits not in (1, 2):
        raise UnsupportedSize(f"only 1 or 2 qubits are supported, got {n_qubits}")
    if n_qubits not in _BASES:
        if n_qubits == 1:
            labels = ("X", "Y", "Z")
            ops = [PAULI[s] for s in labels]
        else:
            labels = tuple(a + b for a, b in product("IXYZ", repeat=2) if a + b != "II")
            ops = [kron(PAULI[s[0]], PAULI[s[1]]) for s in labels]
        arr = np.array(ops)
        arr.setflags(write=False)
        _BASES[n_qubits] = PauliBasis(n_qubits, labels, arr)
    return _BASES[n_qubits]


def reconstruct_density(coeffs, basis):
    """rho = (I + sum_j c_j sigma_j) / dim; accepts ``(K,)`` or ``(N, K)``."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape[-1] != basis.size:
        raise LengthMismatch(f"expected {basis.size} coefficients, got {c.shape[-1]}")
    rho = np.tensordot(c, basis.operators, axes=([-1], [0]))
    rho = rho + np.eye(basis.dim)
    return rho / basis.dim


def coefficients(rho, basis):
    """Re Tr(sigma_j rho) for every basis operator; accepts ``(d, d)`` or ``(N, d, d)``."""
    rho = np.asarray(rho)
    if rho.shape[-1] != basis.dim:
        raise DimMismatch(f"state dim {rho.shape[-1]} != basis dim {basis.dim}")
    # Tr(A B) = sum_ij A_ij B_ji
    return np.einsum("kij,...ji->...k", basis.operators, rho).real


def expectation(rho, obs):
    rho = np.asarray(rho)
    obs = np.asarray(obs)
    if rho.shape != obs.shape:
        raise DimMismatch(f"state {rho.shape} and observable {obs.shape} differ")
    tr = np.trace(obs @ rho)
    if abs(tr.imag) >= 1e-9:
        raise NotHermitian(f"Tr(obs rho) has imaginary part {tr.imag:.3e}")
    return float(tr.real)


def embed_local(op, site):
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (2, 2):
        raise DimMismatch("local operator must be 2x2")
    if site == 0:
        return kron(op, I2)
    if site == 1:
        return kron(I2, op)
    raise BadSite(f"site must be 0 or 1, got {site!r}")


@dataclass
class LindbladModel:
    """Hamiltonian, jump operators and their rates.

    ``rates`` is either a sequence of constants or a callable ``t -> rates``
    that accepts a scalar or a 1-D array of times.
    """

    hamiltonian: np.ndarray
    jumps: list
    rates: object
    channels: tuple = ()

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=np.complex128)
        self.jumps = [np.asarray(j, dtype=np.complex128) for j in self.jumps]
        if hermiticity_defect(self.hamiltonian) > 1e-12:
            raise NotHermitian("Hamiltonian is not Hermitian")
        if not self.channels:
            self.channels = tuple(f"L{k}" for k in range(len(self.jumps)))
        if len(self.channels) != len(self.jumps):
            raise LengthMismatch("one channel label per jump operator")
        if not callable(self.rates):
            r = np.asarray(self.rates, dtype=np.float64)
            if r.shape != (len(self.jumps),):
                raise LengthMismatch(f"{len(self.jumps)} jumps but rates of shape {r.shape}")
            self.rates = r

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    def rates_at(self, t):
        """Rates at time(s) ``t``: shape ``(K,)`` for scalar t, ``(N, K)`` for arrays."""
        t = np.asarray(t, dtype=np.float64)
        if callable(self.rates):
            r = np.asarray(self.rates(t), dtype=np.float64)
        else:
            r = self.rates if t.ndim == 0 else np.broadcast_to(self.rates, t.shape + self.rates.shape)
        if r.shape != t.shape + (len(self.jumps),):
            raise LengthMismatch(f"rate function returned shape {r.shape}")
        return np.array(r)


def hamiltonian_part(rho, h):
    return -1j * (h @ rho - rho @ h)


def dissipator(rho, jump):
    ldl = adjoint(jump) @ jump
    return jump @ rho @ adjoint(jump) - 0.5 * (ldl @ rho + rho @ ldl)


def lindblad_rhs(rho, model, t, check=True):
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != model.hamiltonian.shape:
        raise DimMismatch(f"state {rho.shape} vs model dim {model.dim}")
    if check:
        if hermiticity_defect(rho) > 1e-8:
            raise NotState("rho is not Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-8:
            raise NotState("rho does not have unit trace")
    rates = model.rates_at(t)
    if np.any(rates < 0):
        raise NegativeRate(f"negative rate in {rates}")
    out = hamiltonian_part(rho, model.hamiltonian)
    for g, L in zip(rates, model.jumps):
        out = out + g * dissipator(rho, L)
    return out


@dataclass(frozen=True)
class BlochGenerator:
    """Real form of the Lindblad equation on basis coefficients.

    dc/dt = A_H c + sum_k gamma_k (A_k c + b_k)
    """

    hamiltonian: np.ndarray  # (K, K)
    channels: np.ndarray  # (n_ch, K, K)
    offsets: np.ndarray  # (n_ch, K)
    dim: int

    def rhs(self, c, rates):
        """Coefficient derivative for ``c`` of shape ``(..., K)`` and rates ``(..., n_ch)``."""
        c = np.asarray(c, dtype=np.float64)
        rates = np.asarray(rates, dtype=np.float64)
        out = c @ self.hamiltonian.T
        per_channel = np.einsum("kij,...j->...ki", self.channels, c) + self.offsets
        return out + np.einsum("...k,...ki->...i", rates, per_channel)


def bloch_generator(hamiltonian, jumps, basis):
    """Project the Lindbladian onto ``basis``: A_ij = Tr(s_i L(s_j)) / d, b_i = Tr(s_i L(I)) / d."""
    d = basis.dim
    ops = basis.operators
    eye = np.eye(d, dtype=np.complex128)

    def project(superop):
        a = np.array([[np.trace(si @ superop(sj)) for sj in ops] for si in ops]) / d
        b = np.array([np.trace(si @ superop(eye)) for si in ops]) / d
        return a.real, b.real

    a_h, _ = project(lambda x: hamiltonian_part(x, np.asarray(hamiltonian)))
    a_ch, b_ch = [], []
    for L in jumps:
        a, b = project(lambda x, L=L: dissipator(x, np.asarray(L)))
        a_ch.append(a)
        b_ch.append(b)
    k = basis.size
    return BlochGenerator(
        a_h,
        np.array(a_ch).reshape(len(jumps), k, k),
        np.array(b_ch).reshape(len(jumps), k),
        d,
    )


_YY = kron(SY, SY)


def concurrence_batch(rhos, strict=False):
    """Wootters concurrence for a stack of 4x4 states.

    Uses the Hermitian form sqrt(rho) rho~ sqrt(rho), whose eigenvalues match
    those of rho rho~. With ``strict=False`` small negative eigenvalues of
    rho are clipped, which is how predicted (approximate) states are handled.
    """
    rhos = np.asarray(rhos, dtype=np.complex128)
    if rhos.ndim != 3 or rhos.shape[1:] != (4, 4):
        raise DimMismatch("concurrence needs 4x4 density matrices")
    rhos = 0.5 * (rhos + adjoint(rhos))
    w, v = eigh_stack(rhos)
    if strict and w.min() < -1e-8:
        raise NotState(f"state has negative eigenvalue {w.min():.3e}")
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))[:, None, :]) @ adjoint(v)
    tilde = _YY @ np.conj(rhos) @ _YY
    m = sqrt_rho @ tilde @ sqrt_rho
    m = 0.5 * (m + adjoint(m))
    mu, _ = eigh_stack(m)
    lam = np.sqrt(np.clip(mu, 0.0, None))[:, ::-1]
    return np.maximum(0.0, lam[:, 0] - lam[:, 1:].sum(axis=1))


def concurrence(rho):
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (4, 4):
        raise DimMismatch("concurrence needs a 4x4 density matrix")
    if hermiticity_defect(rho) > 1e-8 or abs(np.trace(rho) - 1.0) > 1e-8:
        raise NotState("rho is not a unit-trace Hermitian matrix")
    return float(concurrence_batch(rho[None], strict=True)[0])


def pure_state(psi):
    psi = np.asarray(psi, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
