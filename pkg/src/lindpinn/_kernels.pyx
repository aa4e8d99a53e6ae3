# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: batched Hermitian Jacobi eigensolver and RK4 Lindblad stepping."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, atan2, cos, sin

from lindpinn._fallback import _superoperators, rk4_propagator

cnp.import_array()

ctypedef double complex cplx


cdef inline double _abs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _jacobi_one(cplx[:, ::1] a, cplx[:, ::1] v, double[::1] w,
                     int max_sweeps, double tol) nogil:
    cdef int n = a.shape[0]
    cdef int p, q, k, sweep, i, j
    cdef double off, x, phi, tau, t, c, s, ap, aq, tmpd
    cdef cplx e, ekp, ekq, u_qp, u_qq
    cdef cplx vk

    for i in range(n):
        for j in range(n):
            v[i, j] = 0
        v[i, i] = 1

    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += _abs2(a[i, j])
        if sqrt(off) < tol or sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                x = sqrt(_abs2(a[p, q]))
                if x == 0.0:
                    continue
                phi = atan2(a[p, q].imag, a[p, q].real)
                e = cos(phi) - 1j * sin(phi)  # exp(-i phi)
                ap = a[p, p].real
                aq = a[q, q].real
                tau = (aq - ap) / (2.0 * x)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # U restricted to (p, q): [[c, s], [-s e, c e]]
                u_qp = -s * e
                u_qq = c * e
                for k in range(n):
                    ekp = a[k, p]
                    ekq = a[k, q]
                    a[k, p] = c * ekp + u_qp * ekq
                    a[k, q] = s * ekp + u_qq * ekq
                for k in range(n):
                    ekp = a[p, k]
                    ekq = a[q, k]
                    a[p, k] = c * ekp + u_qp.conjugate() * ekq
                    a[q, k] = s * ekp + u_qq.conjugate() * ekq
                a[p, q] = 0
                a[q, p] = 0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):
                    ekp = v[k, p]
                    ekq = v[k, q]
                    v[k, p] = c * ekp + u_qp * ekq
                    v[k, q] = s * ekp + u_qq * ekq

    for i in range(n):
        w[i] = a[i, i].real
    # insertion sort, ascending, permuting eigenvector columns
    for i in range(1, n):
        j = i
        while j > 0 and w[j - 1] > w[j]:
            tmpd = w[j - 1]
            w[j - 1] = w[j]
            w[j] = tmpd
            for k in range(n):
                vk = v[k, j - 1]
                v[k, j - 1] = v[k, j]
                v[k, j] = vk
            j -= 1
    return sweep


def eigh_batch(a, int max_sweeps=50, double tol=1e-12):
    """Eigen-decompose a stack of Hermitian matrices by cyclic Jacobi rotations.

    Returns ascending eigenvalues ``(B, n)`` and eigenvector columns ``(B, n, n)``.
    """
    cdef cplx[:, :, ::1] work = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t b, nb = work.shape[0]
    cdef int n = work.shape[1]
    w_arr = np.empty((nb, n), dtype=np.float64)
    v_arr = np.empty((nb, n, n), dtype=np.complex128)
    cdef double[:, ::1] w = w_arr
    cdef cplx[:, :, ::1] v = v_arr
    with nogil:
        for b in range(nb):
            _jacobi_one(work[b], v[b], w[b], max_sweeps, tol)
    return w_arr, v_arr


cdef void _rhs(cplx[:, ::1] h, cplx[:, :, ::1] jumps, cplx[:, :, ::1] jdj,
               double[::1] rates, cplx[:, ::1] rho, cplx[:, ::1] out,
               cplx[:, ::1] tmp) nogil:
    cdef int d = h.shape[0]
    cdef int nk = jumps.shape[0]
    cdef int i, j, l, m, k
    cdef cplx acc, acc2
    cdef double g
    for i in range(d):
        for j in range(d):
            acc = 0
            for l in range(d):
                acc = acc + h[i, l] * rho[l, j] - rho[i, l] * h[l, j]
            out[i, j] = -1j * acc
    for k in range(nk):
        g = rates[k]
        if g == 0.0:
            continue
        # tmp = L rho
        for i in range(d):
            for j in range(d):
                acc = 0
                for l in range(d):
                    acc = acc + jumps[k, i, l] * rho[l, j]
                tmp[i, j] = acc
        for i in range(d):
            for j in range(d):
                acc = 0
                for m in range(d):
                    acc = acc + tmp[i, m] * jumps[k, j, m].conjugate()
                acc2 = 0
                for l in range(d):
                    acc2 = acc2 + jdj[k, i, l] * rho[l, j] + rho[i, l] * jdj[k, l, j]
                out[i, j] = out[i, j] + g * (acc - 0.5 * acc2)


def _propagate(prop, rho0, int nsteps):
    cdef cplx[:, ::1] p = np.ascontiguousarray(prop, dtype=np.complex128)
    cdef int m = p.shape[0]
    out = np.empty((nsteps + 1, m), dtype=np.complex128)
    cdef cplx[:, ::1] s = out
    cdef int n, i, j
    cdef cplx acc
    out[0] = np.asarray(rho0, dtype=np.complex128).reshape(-1)
    with nogil:
        for n in range(nsteps):
            for i in range(m):
                acc = 0
                for j in range(m):
                    acc = acc + p[i, j] * s[n, j]
                s[n + 1, i] = acc
    return out


def rk4_lindblad(h, jumps, rates, rho0, double dt, int nsteps):
    """Classical RK4 on the Lindblad equation with a fixed step.

    ``rates`` holds channel rates on the half-step grid, shape ``(2*nsteps+1, K)``.
    Constant rates make the system autonomous; the step is then applied as a
    precomputed propagator.
    Returns every state, shape ``(nsteps+1, d, d)``.
    """
    cdef cplx[:, ::1] hh = np.ascontiguousarray(h, dtype=np.complex128)
    jumps_arr = np.ascontiguousarray(jumps, dtype=np.complex128)
    cdef cplx[:, :, ::1] jj = jumps_arr
    cdef cplx[:, :, ::1] jdj = np.ascontiguousarray(
        np.conj(np.transpose(jumps_arr, (0, 2, 1))) @ jumps_arr)
    rates_arr = np.ascontiguousarray(rates, dtype=np.float64)
    cdef double[:, ::1] rr = rates_arr
    cdef int d = hh.shape[0]
    if np.all(rates_arr == rates_arr[0]):
        lh, lk = _superoperators(np.asarray(hh), jumps_arr)
        return _propagate(rk4_propagator(lh, lk, rates_arr[0], dt), rho0, nsteps).reshape(nsteps + 1, d, d)
    states_arr = np.empty((nsteps + 1, d, d), dtype=np.complex128)
    cdef cplx[:, :, ::1] states = states_arr
    cdef cplx[:, ::1] k1 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] k2 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] k3 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] k4 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] y = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] tmp = np.empty((d, d), dtype=np.complex128)
    cdef int n, i, j
    states_arr[0] = rho0
    with nogil:
        for n in range(nsteps):
            _rhs(hh, jj, jdj, rr[2 * n], states[n], k1, tmp)
            for i in range(d):
                for j in range(d):
                    y[i, j] = states[n, i, j] + 0.5 * dt * k1[i, j]
            _rhs(hh, jj, jdj, rr[2 * n + 1], y, k2, tmp)
            for i in range(d):
                for j in range(d):
                    y[i, j] = states[n, i, j] + 0.5 * dt * k2[i, j]
            _rhs(hh, jj, jdj, rr[2 * n + 1], y, k3, tmp)
            for i in range(d):
                for j in range(d):
                    y[i, j] = states[n, i, j] + dt * k3[i, j]
            _rhs(hh, jj, jdj, rr[2 * n + 2], y, k4, tmp)
            for i in range(d):
                for j in range(d):
                    states[n + 1, i, j] = states[n, i, j] + dt / 6.0 * (
                        k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    return states_arr
