"""Pure numpy jet kernels.

Jets are stored component-major as ``(C, N)`` arrays: row 0 is the value,
rows ``1..ng`` the first derivatives and the remaining rows the tracked
second derivatives, one per index pair ``(pi[p], pj[p])`` with ``pi <= pj``.
Every function here has a compiled twin in ``_jetkernels.pyx`` with the same
signature and results.
"""

from __future__ import annotations

import numpy as np


def unary_forward(u, f0, f1, f2, ng, pi, pj):
    out = np.empty_like(u)
    out[0] = f0
    if ng:
        out[1 : 1 + ng] = f1 * u[1 : 1 + ng]
    base = 1 + ng
    for p in range(len(pi)):
        i, j = pi[p], pj[p]
        out[base + p] = f1 * u[base + p] + f2 * u[1 + i] * u[1 + j]
    return out


def unary_backward(u, f1, f2, f3, adj, ng, pi, pj):
    gin = np.empty_like(u)
    g0 = adj[0] * f1
    base = 1 + ng
    if ng:
        gin[1 : 1 + ng] = adj[1 : 1 + ng] * f1
        g0 = g0 + f2 * np.einsum("cn,cn->n", adj[1 : 1 + ng], u[1 : 1 + ng])
    for p in range(len(pi)):
        i, j = pi[p], pj[p]
        a = adj[base + p]
        g0 = g0 + a * (f2 * u[base + p] + f3 * u[1 + i] * u[1 + j])
        af2 = a * f2
        gin[1 + i] += af2 * u[1 + j]
        gin[1 + j] += af2 * u[1 + i]
        gin[base + p] = a * f1
    gin[0] = g0
    return gin


def mul_forward(a, b, ng, pi, pj):
    out = np.empty_like(a)
    a0, b0 = a[0], b[0]
    out[0] = a0 * b0
    if ng:
        out[1 : 1 + ng] = a0 * b[1 : 1 + ng] + a[1 : 1 + ng] * b0
    base = 1 + ng
    for p in range(len(pi)):
        i, j = pi[p], pj[p]
        out[base + p] = (
            a0 * b[base + p] + a[1 + i] * b[1 + j] + a[1 + j] * b[1 + i] + a[base + p] * b0
        )
    return out


def mul_backward(a, b, adj, ng, pi, pj):
    ga = np.empty_like(a)
    gb = np.empty_like(b)
    a0, b0 = a[0], b[0]
    ga0 = adj[0] * b0
    gb0 = adj[0] * a0
    base = 1 + ng
    if ng:
        ga0 = ga0 + np.einsum("cn,cn->n", adj[1 : 1 + ng], b[1 : 1 + ng])
        gb0 = gb0 + np.einsum("cn,cn->n", adj[1 : 1 + ng], a[1 : 1 + ng])
        ga[1 : 1 + ng] = adj[1 : 1 + ng] * b0
        gb[1 : 1 + ng] = adj[1 : 1 + ng] * a0
    for p in range(len(pi)):
        i, j = pi[p], pj[p]
        c = adj[base + p]
        ga0 = ga0 + c * b[base + p]
        gb0 = gb0 + c * a[base + p]
        ga[1 + i] += c * b[1 + j]
        ga[1 + j] += c * b[1 + i]
        gb[1 + i] += c * a[1 + j]
        gb[1 + j] += c * a[1 + i]
        ga[base + p] = c * b0
        gb[base + p] = c * a0
    ga[0] = ga0
    gb[0] = gb0
    return ga, gb
