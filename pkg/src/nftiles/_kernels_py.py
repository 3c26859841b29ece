"""Pure-Python twin of the compiled cell kernel (Morse pair, quadratic angle)."""

import math

import numpy as np

_PI = math.pi


def _pair(y, g, i, j, w, alpha):
    dx = [y[i][k] - y[j][k] for k in range(3)]
    r = math.sqrt(dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2])
    e = math.exp(-alpha * (r - 1.0))
    val = e * e - 2.0 * e
    dv = 2.0 * alpha * (e - e * e)
    f = w * dv / r
    for k in range(3):
        g[i][k] += f * dx[k]
        g[j][k] -= f * dx[k]
    return w * val


def _angle(y, g, a, b, c, cc):
    u = [y[a][k] - y[b][k] for k in range(3)]
    v = [y[c][k] - y[b][k] for k in range(3)]
    nu = math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    nv = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
    cx = u[1] * v[2] - u[2] * v[1]
    cy = u[2] * v[0] - u[0] * v[2]
    cz = u[0] * v[1] - u[1] * v[0]
    crs = math.sqrt(cx * cx + cy * cy + cz * cz)
    psi = math.atan2(crs, dot)
    x = _PI - psi
    if abs(x) < 1e-4:
        ratio = 1.0 + x * x / 6.0
    else:
        ratio = x / math.sin(x)
    coef = -2.0 * cc * ratio
    cos = dot / (nu * nv)
    for k in range(3):
        uh = u[k] / nu
        vh = v[k] / nv
        ga = -coef * (vh - cos * uh) / nu
        gc = -coef * (uh - cos * vh) / nv
        g[a][k] += ga
        g[c][k] += gc
        g[b][k] -= ga + gc
    return cc * x * x


def morse_quadratic_cell(y, alpha, c):
    """Cell energy and its 5x3 gradient."""
    y = [[float(v) for v in row] for row in np.asarray(y, dtype=float)]
    g = [[0.0, 0.0, 0.0] for _ in range(5)]
    e = 0.0
    ring = (1, 2, 3, 4, 1)
    for i in range(4):
        a, b = ring[i], ring[i + 1]
        e += _pair(y, g, a, 0, 0.5, alpha)
        e += _pair(y, g, a, b, 0.5, alpha)
        e += _angle(y, g, a, 0, b, c)
    e += _angle(y, g, 1, 0, 3, c)
    e += _angle(y, g, 2, 0, 4, c)
    return e, np.array(g)
