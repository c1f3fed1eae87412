# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.  Signatures mirror :mod:`rgwalk._fallback`."""

import numpy as np

ctypedef double complex cplx


cdef inline void _matvec4(const cplx* A, const cplx* x, cplx* y) noexcept nogil:
    # A is a row-major 4x4 block
    cdef int a
    for a in range(4):
        y[a] = A[4 * a] * x[0] + A[4 * a + 1] * x[1] + A[4 * a + 2] * x[2] + A[4 * a + 3] * x[3]


def evolve_modes(const cplx[:, :, ::1] R, cplx[:, ::1] v, long steps):
    """Apply ``v[n] <- R[n] @ v[n]`` ``steps`` times, in place."""
    cdef Py_ssize_t n, nmodes = R.shape[0]
    cdef long j
    cdef int a
    cdef cplx x[4]
    cdef cplx y[4]
    with nogil:
        for n in range(nmodes):
            for a in range(4):
                x[a] = v[n, a]
            for j in range(steps):
                _matvec4(&R[n, 0, 0], x, y)
                for a in range(4):
                    x[a] = y[a]
            for a in range(4):
                v[n, a] = x[a]
    return np.asarray(v)


def jet_means(const cplx[:, :, :, ::1] D, cplx[:, :, ::1] v, long steps):
    """Propagate K-derivatives of a mode family and record their mode means.

    ``D[i]`` holds the i-th K-derivative of the one-step matrix for every
    mode and ``v[i]`` the i-th derivative of the state.  Each step applies
    the Leibniz rule ``v'[r] = sum_i C(r, i) D[i] v[r - i]``.  Returns an
    array ``(steps + 1, order + 1, 4)`` of means over modes; every entry is
    accumulated in increasing mode order.
    """
    cdef Py_ssize_t order1 = D.shape[0], nmodes = D.shape[1]
    cdef Py_ssize_t n, r, i
    cdef long j
    cdef int a
    if order1 > 8:
        raise ValueError("derivative order above 7 is not supported")
    out_arr = np.zeros((steps + 1, order1, 4), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_arr
    cdef double binom[8][8]
    for r in range(order1):
        for i in range(order1):
            binom[r][i] = 0.0
        binom[r][0] = 1.0
        for i in range(1, r + 1):
            binom[r][i] = binom[r - 1][i - 1] + (binom[r - 1][i] if i < r else 0.0)
    cdef cplx blk[8][16]
    cdef cplx cur[8][4]
    cdef cplx new[8][4]
    cdef cplx y[4]
    cdef double inv = 1.0 / nmodes
    with nogil:
        for n in range(nmodes):
            for r in range(order1):
                for a in range(16):
                    blk[r][a] = D[r, n, a // 4, a % 4]
                for a in range(4):
                    cur[r][a] = v[r, n, a]
                    out[0, r, a] = out[0, r, a] + cur[r][a]
            for j in range(1, steps + 1):
                for r in range(order1):
                    for a in range(4):
                        new[r][a] = 0
                    for i in range(r + 1):
                        _matvec4(blk[i], cur[r - i], y)
                        for a in range(4):
                            new[r][a] = new[r][a] + binom[r][i] * y[a]
                for r in range(order1):
                    for a in range(4):
                        cur[r][a] = new[r][a]
                        out[j, r, a] = out[j, r, a] + new[r][a]
            for r in range(order1):
                for a in range(4):
                    v[r, n, a] = cur[r][a]
        for j in range(steps + 1):
            for r in range(order1):
                for a in range(4):
                    out[j, r, a] = out[j, r, a] * inv
    return out_arr


def step_density(const cplx[:, :, ::1] rho, const cplx[:, ::1] Q, cplx[:, :, ::1] out):
    """One shift-then-coin step of a v-basis density field.

    Component ``c`` is read from site pair ``(m + s_c, m' + t_c)`` with
    ``(s, t) = (+1,+1), (+1,-1), (-1,+1), (-1,-1)`` and indices wrap
    periodically.
    """
    cdef Py_ssize_t N = rho.shape[1]
    cdef Py_ssize_t i, ip, im, k, kp, km
    cdef cplx x0, x1, x2, x3
    cdef int a
    with nogil:
        for i in range(N):
            ip = i + 1 if i + 1 < N else 0
            im = i - 1 if i > 0 else N - 1
            for k in range(N):
                kp = k + 1 if k + 1 < N else 0
                km = k - 1 if k > 0 else N - 1
                x0 = rho[0, ip, kp]
                x1 = rho[1, ip, km]
                x2 = rho[2, im, kp]
                x3 = rho[3, im, km]
                for a in range(4):
                    out[a, i, k] = Q[a, 0] * x0 + Q[a, 1] * x1 + Q[a, 2] * x2 + Q[a, 3] * x3
    return np.asarray(out)
