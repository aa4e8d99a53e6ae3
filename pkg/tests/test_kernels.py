import numpy as np
import pytest

from lindpinn import _fallback, kernels
from lindpinn.quantum import SM, SX, SZ, dissipator, hamiltonian_part

from conftest import BACKENDS, random_hermitian, random_state


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_eigh_batch_matches_lapack(backend, n, rng):
    a = np.array([random_hermitian(rng, n) for _ in range(50)])
    w, v = backend.eigh_batch(a)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-12)
    assert np.all(np.diff(w, axis=1) >= 0)
    recon = v @ (w[..., None] * np.conj(np.swapaxes(v, 1, 2)))
    np.testing.assert_allclose(recon, a, atol=1e-11)
    eye = np.conj(np.swapaxes(v, 1, 2)) @ v
    np.testing.assert_allclose(eye, np.broadcast_to(np.eye(n), eye.shape), atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_eigh_batch_diagonal_and_degenerate(backend):
    a = np.array([np.diag([3.0, 1.0, 1.0, -2.0]), np.eye(4) * 0.25]).astype(complex)
    w, _ = backend.eigh_batch(a)
    np.testing.assert_allclose(w[0], [-2, 1, 1, 3])
    np.testing.assert_allclose(w[1], [0.25] * 4)


def _reference_rk4(h, jumps, rates, rho0, dt, nsteps):
    def f(rho, r):
        out = hamiltonian_part(rho, h)
        for g, L in zip(r, jumps):
            out = out + g * dissipator(rho, L)
        return out

    rho = rho0.copy()
    out = [rho]
    for n in range(nsteps):
        k1 = f(rho, rates[2 * n])
        k2 = f(rho + dt / 2 * k1, rates[2 * n + 1])
        k3 = f(rho + dt / 2 * k2, rates[2 * n + 1])
        k4 = f(rho + dt * k3, rates[2 * n + 2])
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(rho)
    return np.array(out)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("varying", [False, True])
def test_rk4_matches_direct_matrix_form(backend, varying, rng):
    h = 0.4 * SX + 0.3 * SZ
    jumps = np.array([SM, SZ])
    nsteps, dt = 200, 0.01
    t = np.arange(2 * nsteps + 1) * dt / 2
    if varying:
        rates = np.stack([0.2 + 0.1 * np.sin(t), 0.1 * np.exp(-t)], axis=1)
    else:
        rates = np.tile([0.2, 0.1], (len(t), 1))
    rho0 = random_state(rng, 2)
    got = backend.rk4_lindblad(h, jumps, rates, rho0, dt, nsteps)
    ref = _reference_rk4(h, jumps, rates, rho0, dt, nsteps)
    np.testing.assert_allclose(got, ref, atol=1e-13)


@pytest.mark.parametrize("backend", BACKENDS)
def test_constant_rate_propagator_matches_stepping(backend, rng):
    # perturbing only the last rate row forces step-by-step RK4 for every earlier step
    h = random_hermitian(rng, 4)
    jumps = np.array([np.kron(SM, np.eye(2)), np.kron(np.eye(2), SZ)])
    nsteps, dt = 100, 1e-3
    rates = np.tile([0.25, 0.1], (2 * nsteps + 1, 1))
    stepped = rates.copy()
    stepped[-1] += 1e-3
    rho0 = random_state(rng, 4)
    fast = backend.rk4_lindblad(h, jumps, rates, rho0, dt, nsteps)
    slow = backend.rk4_lindblad(h, jumps, stepped, rho0, dt, nsteps)
    np.testing.assert_allclose(fast[:-1], slow[:-1], atol=1e-13)


def test_backends_agree_on_two_qubits(rng):
    if kernels.BACKEND != "cython":
        pytest.skip("compiled extension not built")
    from lindpinn import _kernels

    h = random_hermitian(rng, 4)
    jumps = np.array([random_hermitian(rng, 4) * 0.3, np.kron(SM, np.eye(2))])
    rates = np.abs(rng.normal(size=(101, 2)))
    rho0 = random_state(rng, 4)
    a = _kernels.rk4_lindblad(h, jumps, rates, rho0, 1e-3, 50)
    b = _fallback.rk4_lindblad(h, jumps, rates, rho0, 1e-3, 50)
    np.testing.assert_allclose(a, b, atol=1e-13)
