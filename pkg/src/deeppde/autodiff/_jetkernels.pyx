# cython: language_level=3
"""Compiled jet kernels; same contract as ``_fallback``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def unary_forward(const double[:, ::1] u, const double[::1] f0, const double[::1] f1, const double[::1] f2,
                  Py_ssize_t ng, const Py_ssize_t[::1] pi, const Py_ssize_t[::1] pj):
    cdef Py_ssize_t C = u.shape[0], N = u.shape[1], P = pi.shape[0]
    cdef Py_ssize_t n, c, p, base = 1 + ng
    out_arr = np.empty((C, N))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for n in range(N):
            out[0, n] = f0[n]
            for c in range(1, 1 + ng):
                out[c, n] = f1[n] * u[c, n]
            for p in range(P):
                out[base + p, n] = (f1[n] * u[base + p, n]
                                    + f2[n] * u[1 + pi[p], n] * u[1 + pj[p], n])
    return out_arr


def unary_backward(const double[:, ::1] u, const double[::1] f1, const double[::1] f2, const double[::1] f3,
                   const double[:, ::1] adj, Py_ssize_t ng, const Py_ssize_t[::1] pi, const Py_ssize_t[::1] pj):
    cdef Py_ssize_t C = u.shape[0], N = u.shape[1], P = pi.shape[0]
    cdef Py_ssize_t n, c, p, i, j, base = 1 + ng
    cdef double g0, a, af2
    gin_arr = np.empty((C, N))
    cdef double[:, ::1] gin = gin_arr
    with nogil:
        for n in range(N):
            g0 = adj[0, n] * f1[n]
            for c in range(1, 1 + ng):
                gin[c, n] = adj[c, n] * f1[n]
                g0 = g0 + f2[n] * adj[c, n] * u[c, n]
            for p in range(P):
                i = pi[p]
                j = pj[p]
                a = adj[base + p, n]
                g0 = g0 + a * (f2[n] * u[base + p, n] + f3[n] * u[1 + i, n] * u[1 + j, n])
                af2 = a * f2[n]
                gin[1 + i, n] += af2 * u[1 + j, n]
                gin[1 + j, n] += af2 * u[1 + i, n]
                gin[base + p, n] = a * f1[n]
            gin[0, n] = g0
    return gin_arr


def mul_forward(const double[:, ::1] a, const double[:, ::1] b, Py_ssize_t ng,
                const Py_ssize_t[::1] pi, const Py_ssize_t[::1] pj):
    cdef Py_ssize_t C = a.shape[0], N = a.shape[1], P = pi.shape[0]
    cdef Py_ssize_t n, c, p, i, j, base = 1 + ng
    cdef double a0, b0
    out_arr = np.empty((C, N))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for n in range(N):
            a0 = a[0, n]
            b0 = b[0, n]
            out[0, n] = a0 * b0
            for c in range(1, 1 + ng):
                out[c, n] = a0 * b[c, n] + a[c, n] * b0
            for p in range(P):
                i = 1 + pi[p]
                j = 1 + pj[p]
                out[base + p, n] = (a0 * b[base + p, n] + a[i, n] * b[j, n]
                                    + a[j, n] * b[i, n] + a[base + p, n] * b0)
    return out_arr


def mul_backward(const double[:, ::1] a, const double[:, ::1] b, const double[:, ::1] adj, Py_ssize_t ng,
                 const Py_ssize_t[::1] pi, const Py_ssize_t[::1] pj):
    cdef Py_ssize_t C = a.shape[0], N = a.shape[1], P = pi.shape[0]
    cdef Py_ssize_t n, c, p, i, j, base = 1 + ng
    cdef double a0, b0, ga0, gb0, g
    ga_arr = np.empty((C, N))
    gb_arr = np.empty((C, N))
    cdef double[:, ::1] ga = ga_arr
    cdef double[:, ::1] gb = gb_arr
    with nogil:
        for n in range(N):
            a0 = a[0, n]
            b0 = b[0, n]
            ga0 = adj[0, n] * b0
            gb0 = adj[0, n] * a0
            for c in range(1, 1 + ng):
                g = adj[c, n]
                ga0 = ga0 + g * b[c, n]
                gb0 = gb0 + g * a[c, n]
                ga[c, n] = g * b0
                gb[c, n] = g * a0
            for p in range(P):
                i = 1 + pi[p]
                j = 1 + pj[p]
                g = adj[base + p, n]
                ga0 = ga0 + g * b[base + p, n]
                gb0 = gb0 + g * a[base + p, n]
                ga[i, n] += g * b[j, n]
                ga[j, n] += g * b[i, n]
                gb[i, n] += g * a[j, n]
                gb[j, n] += g * a[i, n]
                ga[base + p, n] = g * b0
                gb[base + p, n] = g * a0
            ga[0, n] = ga0
            gb[0, n] = gb0
    return ga_arr, gb_arr
