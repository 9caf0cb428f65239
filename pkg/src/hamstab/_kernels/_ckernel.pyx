# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend: per-sample RK4 with the closed-loop field evaluated in C."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, isfinite, NAN
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double R_MIN = 1e-8


cdef inline double _ipow(double x, long e) noexcept nogil:
    cdef double r = 1.0
    while e > 0:
        if e & 1:
            r *= x
        x *= x
        e >>= 1
    return r


cdef int _gradient(long kind, const double[::1] dcoef, const long[:, ::1] dexp,
                   const long[::1] dvar, double eps, const double[::1] offset,
                   const double* z, double* w, double* g, int dim) noexcept nogil:
    cdef int j, k
    cdef long K
    cdef double t, R
    for j in range(dim):
        w[j] = z[j] + offset[j]
        g[j] = 0.0
    if kind == 0:
        K = dcoef.shape[0]
        for k in range(K):
            t = dcoef[k]
            for j in range(dim):
                if dexp[k, j]:
                    t *= _ipow(w[j], dexp[k, j])
            g[dvar[k]] += t
        return 0
    R = sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    if R < R_MIN:
        return 2
    t = 1.0 / (R * R * R)
    g[0] = w[0] * t + 0.5 * w[4] + 0.25 * w[0] - eps
    g[1] = w[1] * t - 0.5 * w[3] + 0.25 * w[1]
    g[2] = w[2] * t
    g[3] = w[3] - 0.5 * w[1]
    g[4] = w[4] + 0.5 * w[0]
    g[5] = w[5]
    return 0


cdef int _field(long kind, const double[::1] dcoef, const long[:, ::1] dexp,
                const long[::1] dvar, double eps, const double[::1] offset,
                const double[:, ::1] rows, const double[::1] z0, double c,
                const double[::1] d, const double* z, double* out,
                double* w, double* g, int dim) noexcept nogil:
    cdef int i, j, n = dim // 2
    cdef int nrows = rows.shape[0]
    cdef double f1, b
    cdef int st = _gradient(kind, dcoef, dexp, dvar, eps, offset, z, w, g, dim)
    if st:
        return st
    f1 = 0.0
    for j in range(dim):
        f1 += rows[0, j] * (z[j] - z0[j])
    for j in range(dim):
        g[j] += c * f1 * rows[0, j]
    for j in range(n):
        out[j] = g[n + j]
        out[n + j] = -g[j]
    # brackets use the Hamiltonian part only; g is free scratch from here on
    for i in range(nrows):
        b = 0.0
        for j in range(dim):
            b += rows[i, j] * out[j]
        g[i] = d[i] * b
    for i in range(nrows):
        b = g[i]
        if b == 0.0:
            continue
        for j in range(n):
            out[j] += b * rows[i, n + j]
            out[n + j] -= b * rows[i, j]
    return 0


def closed_loop_field_batch(long kind, const double[::1] dcoef, const long[:, ::1] dexp,
                            const long[::1] dvar, double eps, const double[::1] offset,
                            const double[:, ::1] rows, const double[::1] z0, double c,
                            const double[::1] d, const double[:, ::1] Z):
    cdef Py_ssize_t m = Z.shape[0], s
    cdef int dim = Z.shape[1], j, st
    out = np.empty((m, dim))
    cdef double[:, ::1] F = out
    cdef double* w = <double*> malloc(2 * dim * sizeof(double))
    cdef double* g = w + dim
    try:
        with nogil:
            for s in range(m):
                st = _field(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d,
                            &Z[s, 0], &F[s, 0], w, g, dim)
                if st:
                    for j in range(dim):
                        F[s, j] = NAN
    finally:
        free(w)
    return out


def rk4_batch(long kind, const double[::1] dcoef, const long[:, ::1] dexp,
              const long[::1] dvar, double eps, const double[::1] offset,
              const double[:, ::1] rows, const double[::1] z0, double c,
              const double[::1] d, double[:, ::1] Z, double dt, long nsteps):
    cdef Py_ssize_t m = Z.shape[0], s
    cdef long step
    cdef int dim = Z.shape[1], j, st
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    status = np.zeros(m, dtype=np.int8)
    cdef signed char[::1] stat = status
    # scratch: w, g, k1..k4, y
    cdef double* buf = <double*> malloc(7 * dim * sizeof(double))
    cdef double *w = buf, *g = buf + dim, *k1 = buf + 2 * dim, *k2 = buf + 3 * dim
    cdef double *k3 = buf + 4 * dim, *k4 = buf + 5 * dim, *y = buf + 6 * dim
    cdef double* z
    try:
        with nogil:
            for s in range(m):
                z = &Z[s, 0]
                st = 0
                for step in range(nsteps):
                    st = _field(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d, z, k1, w, g, dim)
                    if st:
                        break
                    for j in range(dim):
                        y[j] = z[j] + h2 * k1[j]
                    st = _field(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d, y, k2, w, g, dim)
                    if st:
                        break
                    for j in range(dim):
                        y[j] = z[j] + h2 * k2[j]
                    st = _field(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d, y, k3, w, g, dim)
                    if st:
                        break
                    for j in range(dim):
                        y[j] = z[j] + dt * k3[j]
                    st = _field(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d, y, k4, w, g, dim)
                    if st:
                        break
                    for j in range(dim):
                        y[j] = z[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                        if not isfinite(y[j]):
                            st = 1
                    if st:
                        break
                    for j in range(dim):
                        z[j] = y[j]
                stat[s] = st
    finally:
        free(buf)
    return np.asarray(Z), status
