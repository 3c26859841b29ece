"""Cell and window energies, the assumption audit and cell minimisation.

A unit cell is a center ``y0`` with its four lattice neighbours ``y1..y4``
listed counterclockwise (``+e1, +e2, -e1, -e2``).  Pair terms use ``v2`` and
angle terms ``v3``; the default potentials are a Morse pair term and a
quadratic penalty on deviation from a straight angle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .errors import ConvergenceError, DegenerateError, DomainError
from .geom_core import angle_between

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class PotentialParams:
    """Pair and angle potentials plus the small parameters of the audit.

    ``v2`` is one of ``morse`` (stiffness ``alpha``), ``lj`` (12-6 with its
    minimum moved to 1) or ``plateau`` (Morse up to ``plateau_start``, then
    flattened to zero slope over ``plateau_width``).  ``v3`` is
    ``quadratic``: ``c * (pi - psi)**2``.
    """

    v2: str = "morse"
    alpha: float = 2.0
    v3: str = "quadratic"
    c: float = 0.04
    eta: float = 0.05
    epsilon: float = 1e-3
    plateau_start: float = 1.3
    plateau_width: float = 0.05

    def __post_init__(self):
        if self.v2 not in ("morse", "lj", "plateau"):
            raise DomainError(f"unknown v2 family {self.v2!r}")
        if self.v3 != "quadratic":
            raise DomainError(f"unknown v3 family {self.v3!r}")
        if self.alpha <= 0 or self.c <= 0:
            raise DomainError("alpha and c must be positive")
        if self.plateau_width <= 0 or self.plateau_start <= 1.0:
            raise DomainError("plateau must start beyond the minimum and have positive width")
        _register(self)

    # -- pair term -----------------------------------------------------------

    def _morse(self, r, order: int):
        a = self.alpha
        e1 = np.exp(-a * (r - 1.0))
        if order == 0:
            return e1 * e1 - 2.0 * e1
        if order == 1:
            return -2.0 * a * e1 * e1 + 2.0 * a * e1
        return 4.0 * a * a * e1 * e1 - 2.0 * a * a * e1

    def v2_value(self, r, order: int = 0):
        """``v2`` or its first/second derivative, vectorised over ``r``."""
        r = np.asarray(r, dtype=float)
        if self.v2 == "morse":
            return self._morse(r, order)
        if self.v2 == "lj":
            if order == 0:
                return r ** -12 - 2.0 * r ** -6
            if order == 1:
                return -12.0 * r ** -13 + 12.0 * r ** -7
            return 156.0 * r ** -14 - 84.0 * r ** -8
        # plateau: quadratic fade of the Morse slope to zero, then constant
        a0, w = self.plateau_start, self.plateau_width
        m0, m1 = self._morse(a0, 0), self._morse(a0, 1)
        t = np.clip(r - a0, 0.0, w)
        if order == 0:
            return np.where(r <= a0, self._morse(r, 0), m0 + m1 * t - m1 * t * t / (2.0 * w))
        if order == 1:
            return np.where(r <= a0, self._morse(r, 1), m1 * (1.0 - t / w))
        return np.where(r <= a0, self._morse(r, 2), np.where(r < a0 + w, -m1 / w, 0.0))

    def dv2(self, r):
        return self.v2_value(r, 1)

    # -- angle term ----------------------------------------------------------

    def v3_value(self, psi, order: int = 0):
        x = math.pi - np.asarray(psi, dtype=float)
        if order == 0:
            return self.c * x * x
        if order == 1:
            return -2.0 * self.c * x
        return 2.0 * self.c + 0.0 * x

    def dv3_over_sin(self, psi):
        """``v3'(psi) / sin(psi)``, finite at psi = pi."""
        x = math.pi - np.asarray(psi, dtype=float)
        small = np.abs(x) < 1e-4
        ratio = np.where(small, 1.0 + x * x / 6.0, x / np.where(small, 1.0, np.sin(x)))
        return -2.0 * self.c * ratio

    def v2f(self, r):
        return self.v2_value(r, 0)

    def v3f(self, psi):
        return self.v3_value(psi, 0)


def _register(p: PotentialParams) -> None:
    """Numerical sanity checks on the shape of the potentials."""
    r = np.linspace(0.7, 3.0, 2301)
    vals = p.v2_value(r)
    if abs(float(p.v2_value(1.0)) + 1.0) > 1e-12:
        raise DomainError("v2 must take the value -1 at r = 1")
    if float(vals.min()) < -1.0 - 1e-12:
        raise DomainError("v2 must attain its minimum -1 at r = 1")
    psi = np.linspace(0.0, math.pi, 1001)
    v3 = p.v3_value(psi)
    if abs(float(p.v3_value(math.pi))) > 1e-15 or float(v3.min()) < 0.0:
        raise DomainError("v3 must be non-negative with v3(pi) = 0")
    if np.any(np.diff(v3, 2) <= 0.0):
        raise DomainError("v3 must be strictly convex")


# ---------------------------------------------------------------------------
# cell energy


@dataclass(frozen=True)
class EnergyBreakdown:
    first_neighbor: float
    second_neighbor: float
    three_body: float
    total: float
    thetas: Tuple[float, float, float, float]
    delta13: float
    delta24: float
    ell_bar: float
    theta_bar: float
    lengths: Tuple[float, float, float, float] = ()


def as_cell(cell) -> np.ndarray:
    y = np.asarray(cell, dtype=float)
    if y.shape != (5, 3):
        raise DomainError(f"a unit cell is five points in R^3, got shape {y.shape}")
    return y


def cell_energy(cell, p: PotentialParams) -> EnergyBreakdown:
    """Energy of one unit cell, term by term."""
    y = as_cell(cell)
    y0 = y[0]
    nb = [y[1 + (i % 4)] for i in range(5)]
    lengths = [float(np.linalg.norm(nb[i] - y0)) for i in range(4)]
    diags = [float(np.linalg.norm(nb[i] - nb[i + 1])) for i in range(4)]
    if min(lengths) == 0.0:
        raise DegenerateError("a neighbour coincides with the center")
    thetas = tuple(angle_between(nb[i] - y0, nb[i + 1] - y0) for i in range(4))
    d13 = angle_between(y[1] - y0, y[3] - y0)
    d24 = angle_between(y[2] - y0, y[4] - y0)
    first = 0.5 * float(np.sum(p.v2_value(np.array(lengths))))
    second = 0.5 * float(np.sum(p.v2_value(np.array(diags))))
    three = float(np.sum(p.v3_value(np.array(thetas)))) + float(p.v3_value(d13)) + float(p.v3_value(d24))
    return EnergyBreakdown(
        first, second, three, first + second + three, thetas, d13, d24,
        sum(lengths) / 4.0, sum(thetas) / 4.0, tuple(lengths),
    )


def identity_cell_energy(p: PotentialParams) -> float:
    """Energy of the undeformed square cell: -2 + 2 v2(sqrt 2) + 4 v3(pi/2)."""
    return -2.0 + 2.0 * float(p.v2_value(SQRT2)) + 4.0 * float(p.v3_value(math.pi / 2))


def _angle_grad(a, b, c, coef):
    """Gradient of ``coef * angle(a, b, c)`` (angle at b) given coef = v3'/sin."""
    u, w = a - b, c - b
    nu, nw = np.linalg.norm(u), np.linalg.norm(w)
    if nu == 0.0 or nw == 0.0:
        raise DegenerateError("zero-length leg in angle gradient")
    uh, wh = u / nu, w / nw
    cos = float(np.dot(uh, wh))
    # d(angle)/da = -(wh - cos uh) / (|u| sin); the sin cancels against coef
    ga = -coef * (wh - cos * uh) / nu
    gc = -coef * (uh - cos * wh) / nw
    return ga, -(ga + gc), gc


def cell_energy_gradient_generic(cell, p: PotentialParams) -> np.ndarray:
    """Analytic gradient of :func:`cell_energy` for any potential family."""
    y = as_cell(cell)
    g = np.zeros((5, 3))
    idx = [1, 2, 3, 4, 1]
    for i in range(4):
        a, b = idx[i], idx[i + 1]
        for (j, k, w) in ((a, 0, 0.5), (a, b, 0.5)):
            d = y[j] - y[k]
            r = float(np.linalg.norm(d))
            if r == 0.0:
                raise DegenerateError("coincident points in a pair term")
            f = w * float(p.v2_value(r, 1)) / r * d
            g[j] += f
            g[k] -= f
        psi = angle_between(y[a] - y[0], y[b] - y[0])
        ga, gb, gc = _angle_grad(y[a], y[0], y[b], float(p.dv3_over_sin(psi)))
        g[a] += ga
        g[0] += gb
        g[b] += gc
    for a, b in ((1, 3), (2, 4)):
        psi = angle_between(y[a] - y[0], y[b] - y[0])
        ga, gb, gc = _angle_grad(y[a], y[0], y[b], float(p.dv3_over_sin(psi)))
        g[a] += ga
        g[0] += gb
        g[b] += gc
    return g


def cell_energy_gradient(cell, p: PotentialParams) -> np.ndarray:
    """Gradient of the cell energy as a 5x3 array (15 numbers).

    Morse with the quadratic angle term goes through the compiled kernel
    when it is available.
    """
    y = as_cell(cell)
    if p.v2 == "morse" and p.v3 == "quadratic":
        _, grad = kernels.morse_quadratic_cell(y, p.alpha, p.c)
        return grad
    return cell_energy_gradient_generic(y, p)


# ---------------------------------------------------------------------------
# window energy


def _window_sets(m: int):
    if m < 1:
        raise DomainError("m must be a positive integer")
    inside = [(i, j) for i in range(-m + 1, m) for j in range(-m + 1, m)]
    closure = [(i, j) for i in range(-m, m + 1) for j in range(-m, m + 1)]
    return inside, closure


def window_energy(y, m: int, p: PotentialParams, *, corner_diagonals: bool = False) -> float:
    """Energy of a deformation on the open square of side 2m centred at 0.

    Nearest-neighbour pairs start in the open square and end in its
    closure; next-nearest pairs lie in the closure and are taken in one
    order only (first point to the right) when they touch the boundary;
    triplets are centred in the open square.  Every sum carries 1/2.

    The four diagonals joining a corner of the closed square to the
    nearest interior point belong to no cell centred in the window and
    are left out unless ``corner_diagonals`` is set; without them the
    window energy is exactly the sum of its cell energies.
    """
    pts = y.points if hasattr(y, "points") else y
    inside, closure = _window_sets(m)
    missing = [x for x in closure if x not in pts]
    if missing:
        raise DomainError(f"window m={m} needs lattice point {missing[0]}")
    in_set = set(inside)

    def on_boundary(x):
        return max(abs(x[0]), abs(x[1])) == m

    P = {x: np.asarray(pts[x], dtype=float) for x in closure}
    e1 = 0.0
    steps = ((1, 0), (-1, 0), (0, 1), (0, -1))
    for x in inside:
        for dx, dy in steps:
            xp = (x[0] + dx, x[1] + dy)
            e1 += float(p.v2_value(np.linalg.norm(P[x] - P[xp])))
    e2 = 0.0
    for x in closure:
        for dx, dy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            xp = (x[0] + dx, x[1] + dy)
            if xp not in P:
                continue
            if (on_boundary(x) or on_boundary(xp)) and not (x[0] - xp[0] > 0):
                continue
            if not corner_diagonals and (x[0], xp[1]) not in in_set and (xp[0], x[1]) not in in_set:
                continue
            e2 += float(p.v2_value(np.linalg.norm(P[x] - P[xp])))
    e3 = 0.0
    for xc in inside:
        nbs = [(xc[0] + dx, xc[1] + dy) for dx, dy in steps]
        for a in nbs:
            for b in nbs:
                if a != b:
                    e3 += float(p.v3_value(angle_between(P[a] - P[xc], P[b] - P[xc])))
    return 0.5 * (e1 + e2 + e3)


def cells_energy_sum(y, m: int, p: PotentialParams) -> float:
    """Sum of the cell energies of all cells centred in the open square."""
    pts = y.points if hasattr(y, "points") else y
    inside, _ = _window_sets(m)
    total = 0.0
    for (i, j) in inside:
        cell = [pts[(i, j)], pts[(i + 1, j)], pts[(i, j + 1)], pts[(i - 1, j)], pts[(i, j - 1)]]
        total += cell_energy(cell, p).total
    return total


# ---------------------------------------------------------------------------
# assumption audit


@dataclass
class AssumptionResult:
    name: str
    passed: bool
    margin: float
    where: str = ""
    note: str = ""


@dataclass
class AssumptionReport:
    results: Dict[str, AssumptionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def vector(self) -> Dict[str, bool]:
        return {k: r.passed for k, r in self.results.items()}


def pair_angle_density(l1, l2, th, p: PotentialParams, diagonal_weight: float = 1.0):
    """``v2(l1)/4 + v2(l2)/4 + w v2(r) + v3(th)`` with r the third triangle side."""
    r = np.sqrt(l1 * l1 + l2 * l2 - 2.0 * l1 * l2 * np.cos(th))
    return 0.25 * p.v2_value(l1) + 0.25 * p.v2_value(l2) + diagonal_weight * p.v2_value(r) + p.v3_value(th)


def pair_angle_hessian(l1, l2, th, p: PotentialParams, diagonal_weight: float = 1.0) -> np.ndarray:
    """Analytic Hessian of :func:`pair_angle_density`, shape (..., 3, 3)."""
    l1, l2, th = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (l1, l2, th)))
    cos, sin = np.cos(th), np.sin(th)
    r = np.sqrt(l1 * l1 + l2 * l2 - 2.0 * l1 * l2 * cos)
    gr = np.stack([(l1 - l2 * cos) / r, (l2 - l1 * cos) / r, l1 * l2 * sin / r], axis=-1)
    hq = np.empty(l1.shape + (3, 3))
    hq[..., 0, 0] = 1.0
    hq[..., 1, 1] = 1.0
    hq[..., 0, 1] = hq[..., 1, 0] = -cos
    hq[..., 0, 2] = hq[..., 2, 0] = l2 * sin
    hq[..., 1, 2] = hq[..., 2, 1] = l1 * sin
    hq[..., 2, 2] = l1 * l2 * cos
    outer = gr[..., :, None] * gr[..., None, :]
    hr = (hq - outer) / r[..., None, None]
    d1 = p.v2_value(r, 1)[..., None, None]
    d2 = p.v2_value(r, 2)[..., None, None]
    H = diagonal_weight * (d2 * outer + d1 * hr)
    H[..., 0, 0] += 0.25 * p.v2_value(l1, 2)
    H[..., 1, 1] += 0.25 * p.v2_value(l2, 2)
    H[..., 2, 2] += p.v3_value(th, 2)
    return H


def _worst(values: np.ndarray, *coords: np.ndarray) -> Tuple[float, str]:
    k = int(np.argmin(values))
    loc = ", ".join(f"{float(c.ravel()[k]):.6g}" for c in coords)
    return float(values.ravel()[k]), loc


def check_assumptions(p: PotentialParams, *, grid: int = 41, random_points: int = 10_000,
                      seed: int = 0, strong_margin: float = 0.0, diagonal_weight: float = 1.0,
                      near_pi: Optional[float] = None) -> AssumptionReport:
    """Numerical audit of the six structural assumptions on the potentials.

    Scalar inequalities are evaluated directly; convexity is sampled on a
    ``grid**3`` lattice plus random points (an audit, not a proof).  The
    last inequality is sampled for theta below pi, where it is strict.
    ``near_pi`` is the radius of the neighbourhood used for the smallness
    condition; by default the largest radius that works is reported.
    """
    eta, eps = p.eta, p.epsilon
    if not (eta > 0 and eps > 0):
        raise DomainError("eta and epsilon must be positive")
    v2, v3 = p.v2f, p.v3f
    base = 8.0 * float(v3(math.pi / 2))
    res: Dict[str, AssumptionResult] = {}

    lhs = float(v2(1 - eta))
    rhs = 3 + 4 * float(v2(SQRT2)) + base
    res["a1"] = AssumptionResult("a1", lhs > rhs, lhs - rhs, f"r={1 - eta:.6g}")

    lhs = float(v2(1 + eta))
    rhs = -1 + 4 * float(v2(SQRT2)) - 4 * float(v2(SQRT2 * (1 - eta) ** 2)) + base
    res["a2"] = AssumptionResult("a2", lhs > rhs, lhs - rhs, f"r={1 + eta:.6g}")

    th = np.linspace(0.0, math.pi / 2 - eta, 2001)
    m3 = v3(th) - (2 + 2 * float(v2(SQRT2)) + 4 * float(v3(math.pi / 2)))
    w, loc = _worst(m3, th)
    res["a3"] = AssumptionResult("a3", bool(np.all(m3 > 0)), w, f"theta={loc}")

    rng = np.random.default_rng(seed)
    g = np.linspace(0.0, 1.0, grid)
    G1, G2, G3 = np.meshgrid(g, g, g, indexing="ij")
    U = np.concatenate([np.stack([G1.ravel(), G2.ravel(), G3.ravel()], axis=1), rng.random((random_points, 3))])
    L1 = 1 - eta + 2 * eta * U[:, 0]
    L2 = 1 - eta + 2 * eta * U[:, 1]
    TH = math.pi / 2 - eta + (math.pi / 2 + eta) * U[:, 2]
    eig = np.linalg.eigvalsh(pair_angle_hessian(L1, L2, TH, p, diagonal_weight))[:, 0]
    band = TH <= math.pi / 2 + 3 * eta
    w_all, loc_all = _worst(eig, L1, L2, TH)
    w_band, _ = _worst(eig[band], L1[band], L2[band], TH[band])
    ok4 = bool(np.all(eig > 0) and np.all(eig[band] > strong_margin))
    res["a4"] = AssumptionResult(
        "a4", ok4, w_all, f"(l1, l2, theta)=({loc_all})",
        f"smallest Hessian eigenvalue; on the strong band {w_band:.6g}",
    )

    # largest radius around pi on which |v3| and |v3'| stay below epsilon
    def small_on(rad):
        x = np.linspace(math.pi - rad, math.pi, 201)
        return bool(np.all(np.abs(v3(x)) <= eps) and np.all(np.abs(p.v3_value(x, 1)) <= eps))

    if near_pi is None:
        lo, hi = 0.0, math.pi
        if small_on(0.0):
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if small_on(mid) else (lo, mid)
            res["a5"] = AssumptionResult("a5", lo > 0, lo, "", "radius of the neighbourhood of pi")
        else:
            res["a5"] = AssumptionResult("a5", False, 0.0, "theta=pi")
    else:
        res["a5"] = AssumptionResult("a5", small_on(near_pi), near_pi, "", "given radius")

    ell = np.linspace(1 - eta, 1.0, 41)
    th6 = np.linspace(math.pi / 2 - eta, math.pi, 801)[:-1]
    E, T = np.meshgrid(ell, th6, indexing="ij")
    q = np.sqrt(1 - np.cos(T))
    left = -2 * SQRT2 * q * p.v3_value(T, 1)
    right = E * np.sin(T) * p.dv2(SQRT2 * E * q)
    m6 = np.minimum(left, right - left)
    w6, loc6 = _worst(m6, E, T)
    res["a6"] = AssumptionResult("a6", bool(np.all(left > 0) and np.all(right > left)), w6, f"(l, theta)=({loc6})")
    return AssumptionReport(res)


# ---------------------------------------------------------------------------
# minimisation


@dataclass
class MinimizationResult:
    cell: np.ndarray
    breakdown: EnergyBreakdown
    iterations: int
    gradient_norm: float
    warning: str = ""
    trace: List[float] = field(default_factory=list)

    @property
    def ell_bar(self) -> float:
        return self.breakdown.ell_bar

    @property
    def theta_bar(self) -> float:
        return self.breakdown.theta_bar

    @property
    def delta13(self) -> float:
        return self.breakdown.delta13

    @property
    def delta24(self) -> float:
        return self.breakdown.delta24


def flat_cell() -> np.ndarray:
    return np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], dtype=float)


def gauge_fix(cell) -> np.ndarray:
    """Move y0 to the origin, y1 onto +x and y2 into the upper xy half-plane."""
    y = as_cell(cell) - np.asarray(cell, dtype=float)[0]
    ex = y[1] / np.linalg.norm(y[1])
    t = y[2] - np.dot(y[2], ex) * ex
    if np.linalg.norm(t) == 0.0:
        raise DegenerateError("y1 and y2 are collinear with the center")
    ey = t / np.linalg.norm(t)
    ez = np.cross(ex, ey)
    return y @ np.stack([ex, ey, ez], axis=1)


_FREE = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2), (4, 0), (4, 1), (4, 2)]


def _unpack(x: np.ndarray) -> np.ndarray:
    y = np.zeros((5, 3))
    for k, (i, j) in enumerate(_FREE):
        y[i, j] = x[k]
    return y


def _pack(y: np.ndarray) -> np.ndarray:
    return np.array([y[i, j] for i, j in _FREE])


def _energy_and_grad(x: np.ndarray, p: PotentialParams) -> Tuple[float, np.ndarray]:
    y = _unpack(x)
    if p.v2 == "morse" and p.v3 == "quadratic":
        e, g = kernels.morse_quadratic_cell(y, p.alpha, p.c)
    else:
        e, g = cell_energy(y, p).total, cell_energy_gradient_generic(y, p)
    return e, _pack(g)


def minimize_cell(p: PotentialParams, init: Union[str, np.ndarray, None] = "flat", *,
                  seed: int = 0, jitter: float = 0.05, gtol: float = 1e-10,
                  max_iter: int = 200_000, check: bool = True) -> MinimizationResult:
    """Local minimiser of the cell energy, rigid motions factored out.

    Gradient descent with Barzilai-Borwein step lengths safeguarded by an
    Armijo backtracking search.  ``init="flat"`` starts from the square
    cell with a seeded random perturbation of size ``jitter``.
    """
    warning = ""
    if check:
        rep = check_assumptions(p)
        if not rep.passed:
            failed = ", ".join(k for k, r in rep.results.items() if not r.passed)
            warning = f"assumptions not satisfied: {failed}"
            logger.warning(warning)
    if isinstance(init, str) or init is None:
        if init not in ("flat", None):
            raise DomainError(f"unknown preset {init!r}")
        rng = np.random.default_rng(seed)
        y0 = flat_cell() + jitter * rng.standard_normal((5, 3))
    else:
        y0 = as_cell(init)
    x = _pack(gauge_fix(y0))
    e, g = _energy_and_grad(x, p)
    step = 1e-2
    trace = [e]
    x_prev = g_prev = None
    for it in range(1, max_iter + 1):
        gn = float(np.linalg.norm(g))
        if gn < gtol:
            y = _unpack(x)
            return MinimizationResult(y, cell_energy(y, p), it - 1, gn, warning, trace)
        if x_prev is not None:
            s, r = x - x_prev, g - g_prev
            sr = float(np.dot(s, r))
            step = float(np.dot(s, s)) / sr if sr > 0 else 1e-2
            step = min(max(step, 1e-8), 1e3)
        t = step
        # non-monotone Armijo test against the recent maximum, with a
        # rounding allowance so the search does not stall near convergence
        ref = max(trace[-10:]) + 4.0 * np.finfo(float).eps * (1.0 + abs(e))
        while True:
            x_new = x - t * g
            try:
                e_new, g_new = _energy_and_grad(x_new, p)
            except DegenerateError:
                e_new = math.inf
            if e_new <= ref - 1e-4 * t * gn * gn or t < 1e-14:
                break
            t *= 0.5
        if not math.isfinite(e_new):
            break
        x_prev, g_prev = x, g
        x, e, g = x_new, e_new, g_new
        trace.append(e)
    raise ConvergenceError(f"no convergence after {max_iter} iterations (|grad| = {np.linalg.norm(g):.3e})", trace)


def _one_start(args):
    p, seed, kw = args
    return minimize_cell(p, seed=seed, **kw)


def minimize_starts(p: PotentialParams, seeds: Sequence[int], *, workers: Optional[int] = None,
                    **kw) -> List[MinimizationResult]:
    """Run :func:`minimize_cell` from several seeded starts.

    Starts share nothing, so with ``workers > 1`` they run in separate
    processes.  Results come back in seed order either way.
    """
    kw.setdefault("check", False)
    jobs = [(p, int(s), kw) for s in seeds]
    if not workers or workers <= 1 or len(jobs) <= 1:
        return [_one_start(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_one_start, jobs))


# ---------------------------------------------------------------------------
# angle compatibility


def f_general(thetas: Sequence[float], delta13: float) -> float:
    """Angle delta24 forced by the four cell angles and delta13 (delta13 < pi)."""
    t1, t2, t3, t4 = (float(t) for t in thetas)
    d = float(delta13)
    if not d < math.pi:
        raise DomainError("f is undefined at delta13 = pi")
    s2 = math.sin(d) ** 2
    if s2 == 0.0:
        raise DomainError("f is undefined for sin(delta13) = 0")
    c1, c2, c3, c4, cd = math.cos(t1), math.cos(t2), math.cos(t3), math.cos(t4), math.cos(d)
    b2 = (c2 - cd * c1)
    b4 = (c3 - cd * c4)
    q2 = 1.0 - c1 * c1 - b2 * b2 / s2
    q4 = 1.0 - c4 * c4 - b4 * b4 / s2
    if q2 <= 0.0 or q4 <= 0.0:
        raise DomainError("square-root argument is not positive")
    arg = c1 * c4 + b2 * b4 / s2 - math.sqrt(q2) * math.sqrt(q4)
    if not -1.0 <= arg <= 1.0:
        raise DomainError(f"arccos argument {arg!r} outside [-1, 1]")
    return math.acos(arg)


def f_theta(theta: float, delta: float) -> float:
    """``2 arccos(cos(theta) / cos(delta / 2))``."""
    ch = math.cos(delta / 2.0)
    if ch == 0.0:
        raise DomainError("cos(delta/2) vanishes")
    arg = math.cos(theta) / ch
    if abs(arg) > 1.0:
        raise DomainError("|cos(theta)/cos(delta/2)| exceeds 1")
    return 2.0 * math.acos(arg)


def f_theta_fixed_point(theta: float, *, cross_check: bool = True) -> float:
    """The fixed point 2 arccos(sqrt(cos theta)), optionally confirmed by bisection."""
    c = math.cos(theta)
    if c <= 0.0:
        raise DomainError("theta must be below pi/2")
    closed = 2.0 * math.acos(math.sqrt(c))
    if cross_check:
        # f_theta maps [0, 2 theta] onto itself decreasingly: one sign change
        a, b = 0.0, 2.0 * theta
        for _ in range(200):
            mid = 0.5 * (a + b)
            if f_theta(theta, mid) - mid > 0:
                a = mid
            else:
                b = mid
        if abs(0.5 * (a + b) - closed) > 1e-10:
            raise DomainError("bisection disagrees with the closed-form fixed point")
    return closed


# ---------------------------------------------------------------------------
# potential files: one ``key = value`` per line, ``#`` starts a comment

_FIELD_TYPES = {f: (str if f in ("v2", "v3") else float) for f in PotentialParams.__dataclass_fields__}


def parse_potential(text: str) -> PotentialParams:
    kw = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in _FIELD_TYPES:
            raise DomainError(f"line {n}: expected 'key = value' with key in {sorted(_FIELD_TYPES)}")
        try:
            kw[key] = _FIELD_TYPES[key](value.strip())
        except ValueError:
            raise DomainError(f"line {n}: bad value for {key}: {value.strip()!r}") from None
    return PotentialParams(**kw)


def load_potential(path) -> PotentialParams:
    with open(path, encoding="utf-8") as fh:
        return parse_potential(fh.read())


def format_potential(p: PotentialParams) -> str:
    lines = []
    for name, typ in _FIELD_TYPES.items():
        v = getattr(p, name)
        lines.append(f"{name} = {v if typ is str else repr(float(v))}")
    return "\n".join(lines) + "\n"
