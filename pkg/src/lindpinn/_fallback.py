"""Pure numpy implementations of the compiled kernels.

Signatures and results match ``_kernels`` to rounding; the Jacobi sweep here
rotates the same (p, q) pair across the whole batch at once.
"""

import numpy as np


def eigh_batch(a, max_sweeps=50, tol=1e-12):
    a = np.array(a, dtype=np.complex128, copy=True)
    nb, n, _ = a.shape
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy()
    offmask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=1))
        if np.all(off < tol):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                x = np.abs(apq)
                active = x > 0.0
                if not active.any():
                    continue
                safe_x = np.where(active, x, 1.0)
                e = np.where(active, np.conj(apq) / safe_x, 1.0)
                tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe_x)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                u_qp = (-s * e)[:, None]
                u_qq = (c * e)[:, None]
                cc = c[:, None]
                ss = s[:, None]

                colp = a[:, :, p].copy()
                colq = a[:, :, q]
                a[:, :, p] = cc * colp + u_qp * colq
                a[:, :, q] = ss * colp + u_qq * colq
                rowp = a[:, p, :].copy()
                rowq = a[:, q, :]
                a[:, p, :] = cc * rowp + np.conj(u_qp) * rowq
                a[:, q, :] = ss * rowp + np.conj(u_qq) * rowq
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                a[:, p, p] = a[:, p, p].real
                a[:, q, q] = a[:, q, q].real
                vp = v[:, :, p].copy()
                vq = v[:, :, q]
                v[:, :, p] = cc * vp + u_qp * vq
                v[:, :, q] = ss * vp + u_qq * vq

    w = np.real(np.diagonal(a, axis1=1, axis2=2)).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w, v


def _superoperators(h, jumps):
    # row-major vec: vec(A X B) = kron(A, B.T) vec(X)
    d = h.shape[0]
    eye = np.eye(d)
    lh = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    lk = []
    for L in jumps:
        ldl = L.conj().T @ L
        lk.append(np.kron(L, L.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    return lh, np.array(lk).reshape(len(jumps), d * d, d * d)


def rk4_propagator(lh, lk, rates, dt):
    """One RK4 step of the autonomous system as a matrix: its degree-4 Taylor polynomial."""
    m = (lh + np.tensordot(rates, lk, axes=1)) * dt
    m2 = m @ m
    return np.eye(m.shape[0]) + m + m2 / 2 + m2 @ m / 6 + m2 @ m2 / 24


def rk4_lindblad(h, jumps, rates, rho0, dt, nsteps):
    h = np.asarray(h, dtype=np.complex128)
    jumps = np.asarray(jumps, dtype=np.complex128)
    rates = np.asarray(rates, dtype=np.float64)
    d = h.shape[0]
    lh, lk = _superoperators(h, jumps)
    states = np.empty((nsteps + 1, d * d), dtype=np.complex128)
    states[0] = np.asarray(rho0, dtype=np.complex128).reshape(-1)

    if np.all(rates == rates[0]):
        prop = rk4_propagator(lh, lk, rates[0], dt)
        for n in range(nsteps):
            states[n + 1] = prop @ states[n]
        return states.reshape(nsteps + 1, d, d)

    gens = lh[None] + np.tensordot(rates, lk, axes=1)
    for n in range(nsteps):
        y = states[n]
        k1 = gens[2 * n] @ y
        k2 = gens[2 * n + 1] @ (y + 0.5 * dt * k1)
        k3 = gens[2 * n + 1] @ (y + 0.5 * dt * k2)
        k4 = gens[2 * n + 2] @ (y + dt * k3)
        states[n + 1] = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return states.reshape(nsteps + 1, d, d)
