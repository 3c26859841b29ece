# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled cell kernel: Morse pair term, quadratic angle term."""

from libc.math cimport exp, sqrt, atan2, sin, fabs, M_PI

import numpy as np


cdef double _pair(double[:, :] y, double[:, :] g, int i, int j, double w, double alpha):
    cdef double dx[3]
    cdef double r, e, f
    cdef int k
    for k in range(3):
        dx[k] = y[i, k] - y[j, k]
    r = sqrt(dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2])
    e = exp(-alpha * (r - 1.0))
    f = w * 2.0 * alpha * (e - e * e) / r
    for k in range(3):
        g[i, k] += f * dx[k]
        g[j, k] -= f * dx[k]
    return w * (e * e - 2.0 * e)


cdef double _angle(double[:, :] y, double[:, :] g, int a, int b, int c, double cc):
    cdef double u[3]
    cdef double v[3]
    cdef double nu, nv, dot, cx, cy, cz, psi, x, ratio, coef, cs, uh, vh, ga, gc
    cdef int k
    for k in range(3):
        u[k] = y[a, k] - y[b, k]
        v[k] = y[c, k] - y[b, k]
    nu = sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    nv = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
    cx = u[1] * v[2] - u[2] * v[1]
    cy = u[2] * v[0] - u[0] * v[2]
    cz = u[0] * v[1] - u[1] * v[0]
    psi = atan2(sqrt(cx * cx + cy * cy + cz * cz), dot)
    x = M_PI - psi
    if fabs(x) < 1e-4:
        ratio = 1.0 + x * x / 6.0
    else:
        ratio = x / sin(x)
    coef = -2.0 * cc * ratio
    cs = dot / (nu * nv)
    for k in range(3):
        uh = u[k] / nu
        vh = v[k] / nv
        ga = -coef * (vh - cs * uh) / nu
        gc = -coef * (uh - cs * vh) / nv
        g[a, k] += ga
        g[c, k] += gc
        g[b, k] -= ga + gc
    return cc * x * x


def morse_quadratic_cell(y, double alpha, double c):
    """Cell energy and its 5x3 gradient."""
    cdef double[:, :] yy = np.ascontiguousarray(y, dtype=np.float64)
    out = np.zeros((5, 3))
    cdef double[:, :] g = out
    cdef double e = 0.0
    cdef int i, a, b
    cdef int ring[5]
    ring[:] = [1, 2, 3, 4, 1]
    for i in range(4):
        a = ring[i]
        b = ring[i + 1]
        e += _pair(yy, g, a, 0, 0.5, alpha)
        e += _pair(yy, g, a, b, 0.5, alpha)
        e += _angle(yy, g, a, 0, b, c)
    e += _angle(yy, g, 1, 0, 3, c)
    e += _angle(yy, g, 2, 0, 4, c)
    return e, out
