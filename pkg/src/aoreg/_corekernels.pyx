# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: fixed-step RK4 and pairwise trapezoid integrals.

Contracts match aoreg._pykernels; see that module for documentation.
"""

from libc.math cimport sin, isfinite, fabs

import numpy as np

DIVERGENCE_LIMIT = 1e12

cdef double _LIMIT = 1e12


cdef void _rhs(double[:, ::1] drift, double[::1] z, double[::1] f,
               double[::1] out, Py_ssize_t nz) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(nz):
        acc = f[i]
        for j in range(nz):
            acc += drift[i, j] * z[j]
        out[i] = acc


cdef void _force(double[:, ::1] gain, double[:, ::1] amps, double[::1] freqs,
                 double[::1] phases, double t, double[::1] exc,
                 double[::1] out, Py_ssize_t nz, Py_ssize_t m,
                 Py_ssize_t nf) noexcept nogil:
    cdef Py_ssize_t i, l
    cdef double sv
    for i in range(m):
        exc[i] = 0.0
    for l in range(nf):
        sv = sin(freqs[l] * t + phases[l])
        for i in range(m):
            exc[i] += amps[l, i] * sv
    for i in range(nz):
        out[i] = 0.0
        for l in range(m):
            out[i] += gain[i, l] * exc[l]


def rk4_forced_lti(double[:, ::1] drift, double[:, ::1] gain,
                   double[:, ::1] amps, double[::1] freqs, double[::1] phases,
                   double[::1] z0, double t0, double dt, Py_ssize_t n_steps):
    cdef Py_ssize_t nz = z0.shape[0]
    cdef Py_ssize_t m = gain.shape[1]
    cdef Py_ssize_t nf = freqs.shape[0]
    Z_arr = np.empty((n_steps + 1, nz))
    cdef double[:, ::1] Z = Z_arr
    work = np.zeros((8, nz))
    cdef double[:, ::1] w = work
    exc_arr = np.zeros(max(m, 1))
    cdef double[::1] exc = exc_arr
    z_arr = np.empty(nz)
    cdef double[::1] z = z_arr
    zt_arr = np.empty(nz)
    cdef double[::1] zt = zt_arr
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double t, val
    cdef Py_ssize_t k, i
    cdef bint bad

    for i in range(nz):
        z[i] = z0[i]
        Z[0, i] = z0[i]

    for k in range(n_steps):
        t = t0 + k * dt
        # w rows: 0..3 = k1..k4, 5..7 = forcing at t, t+dt/2, t+dt
        _force(gain, amps, freqs, phases, t, exc, w[5], nz, m, nf)
        _force(gain, amps, freqs, phases, t + half, exc, w[6], nz, m, nf)
        _force(gain, amps, freqs, phases, t + dt, exc, w[7], nz, m, nf)
        _rhs(drift, z, w[5], w[0], nz)
        for i in range(nz):
            zt[i] = z[i] + half * w[0, i]
        _rhs(drift, zt, w[6], w[1], nz)
        for i in range(nz):
            zt[i] = z[i] + half * w[1, i]
        _rhs(drift, zt, w[6], w[2], nz)
        for i in range(nz):
            zt[i] = z[i] + dt * w[2, i]
        _rhs(drift, zt, w[7], w[3], nz)
        bad = False
        for i in range(nz):
            val = z[i] + sixth * (w[0, i] + 2.0 * w[1, i] + 2.0 * w[2, i] + w[3, i])
            z[i] = val
            if not isfinite(val) or fabs(val) > _LIMIT:
                bad = True
        if bad:
            Z_arr[k + 1 :] = np.nan
            return Z_arr, k + 1
        for i in range(nz):
            Z[k + 1, i] = z[i]
    return Z_arr, -1


def pair_integrals(double[:, ::1] fa, double[:, ::1] fb, Py_ssize_t r, double dt):
    cdef Py_ssize_t npts = fa.shape[0]
    cdef Py_ssize_t da = fa.shape[1]
    cdef Py_ssize_t db = fb.shape[1]
    cdef Py_ssize_t s = (npts - 1) // r
    out_arr = np.zeros((s, da * db))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, step, a, b, t
    cdef double wgt
    for k in range(s):
        for step in range(r + 1):
            t = k * r + step
            wgt = dt if 0 < step < r else 0.5 * dt
            for a in range(da):
                for b in range(db):
                    out[k, a * db + b] += wgt * fa[t, a] * fb[t, b]
    return out_arr
