"""Whole configurations: type patterns, their realisation and diagnostics.

Tiles of a pattern sit at even-even lattice sites ``(2i, 2j)``.  A family-A
pattern is constant along d1 = (1, 1), so its tile types depend only on the
diagonal index ``k = j - i``; family B is the quarter-turn image and is
constant along d2 = (-1, 1).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .attach import Direction, attach, place
from .errors import DegenerateError, DomainError, NftError
from .geom_core import CONSTRAINT_TOL, CellConstants, Form, angle_between, bond_angle, cell_form, unit
from .tiles import (
    FAMILY_A,
    FAMILY_B,
    M1_SETS,
    M2_SETS,
    TileType,
    rotate_type,
    tt,
)

logger = logging.getLogger(__name__)

Site = Tuple[int, int]
HalfSite = Tuple[float, float]


class Family(enum.Enum):
    FAMILY_A = "A"
    FAMILY_B = "B"


class SectionSymbol(enum.Enum):
    FLAT = "F"
    ROLL_UP = "U"
    ROLL_DOWN = "D"

    @classmethod
    def parse(cls, token: str) -> "SectionSymbol":
        for m in cls:
            if m.value == token.strip().upper():
                return m
        raise DomainError(f"unknown section token {token!r}")


FAMILY_SETS = {Family.FAMILY_A: frozenset(FAMILY_A), Family.FAMILY_B: frozenset(FAMILY_B)}


@dataclass(frozen=True)
class TypePattern:
    """Tile types on the sites ``(2i, 2j)``, ``0 <= i < W``, ``0 <= j < H``."""

    shape: Tuple[int, int]
    sigma: Mapping[Site, TileType]
    family: Family = Family.FAMILY_A
    periodic: Optional[int] = None

    def __post_init__(self):
        w, h = self.shape
        if w < 1 or h < 1:
            raise DomainError(f"empty window {self.shape}")
        want = {(2 * i, 2 * j) for i in range(w) for j in range(h)}
        if set(self.sigma) != want:
            raise DomainError("sigma must cover exactly the even sites of the window")

    def sites(self) -> List[Site]:
        w, h = self.shape
        return [(2 * i, 2 * j) for j in range(h) for i in range(w)]

    def __getitem__(self, site: Site) -> TileType:
        return self.sigma[site]

    def rotated(self) -> "TypePattern":
        """Quarter-turn image: (s, t) -> (t, -s) shifted back into the window.

        Tile types turn clockwise with the lattice, so a family-B pattern
        becomes a family-A one and vice versa.
        """
        w, h = self.shape
        out = {}
        for (s, t), typ in self.sigma.items():
            out[(t, 2 * (w - 1) - s)] = rotate_type(typ, "CW")
        fam = Family.FAMILY_A if self.family is Family.FAMILY_B else Family.FAMILY_B
        return TypePattern((h, w), out, fam, self.periodic)

    def unrotate_site(self, site: Site) -> Site:
        """Inverse of the site map used by :meth:`rotated`."""
        w, _ = self.shape
        s2, t2 = site
        return (2 * (w - 1) - t2, s2)


@dataclass(frozen=True)
class Violation:
    rule: str
    sites: Tuple[Site, ...]
    detail: str = ""


@dataclass
class PatternReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def _validate_family_a(p: TypePattern) -> List[Violation]:
    out: List[Violation] = []
    allowed = FAMILY_SETS[Family.FAMILY_A]
    for site in p.sites():
        if p[site] not in allowed:
            out.append(Violation("family", (site,), f"{p[site]} is not in the admissible set"))
    for (s, t) in p.sites():
        nxt = (s + 2, t + 2)
        if nxt in p.sigma and p[nxt] != p[(s, t)]:
            out.append(Violation("d1-constancy", ((s, t), nxt), f"{p[(s, t)]} != {p[nxt]}"))
    for (s, t) in p.sites():
        below = (s, t - 2)
        if below not in p.sigma:
            continue
        up, lo = p[(s, t)], p[below]
        for name, (up_set, lo_set) in (("M1", M1_SETS), ("M2", M2_SETS)):
            if (up in up_set) != (lo in lo_set):
                out.append(Violation(name, ((s, t), below), f"{up} over {lo}"))
    if p.periodic:
        k_type: Dict[int, TileType] = {}
        for (s, t) in p.sites():
            k_type.setdefault((t - s) // 2, p[(s, t)])
        for k, typ in k_type.items():
            other = k_type.get(k + p.periodic)
            if other is not None and other != typ:
                out.append(Violation("period", (), f"diagonal {k} and {k + p.periodic} differ"))
    return out


def validate_pattern(p: TypePattern) -> PatternReport:
    """Check family membership, constancy along the rolling-free diagonal and
    the vertical matching conditions.  Violations are reported, not raised."""
    if p.family is Family.FAMILY_A:
        return PatternReport(_validate_family_a(p))
    q = p.rotated()
    out = []
    for v in _validate_family_a(q):
        rule = {"d1-constancy": "d2-constancy"}.get(v.rule, v.rule)
        out.append(Violation(rule, tuple(p.unrotate_site(x) for x in v.sites), v.detail))
    return PatternReport(out)


# ---------------------------------------------------------------------------
# building patterns

# family-A types with (SE half, NW half) states and (SE, NW) boundary
# orientations; SE faces diagonal index k - 1, NW faces k + 1
_F, _U, _D = SectionSymbol.FLAT, SectionSymbol.ROLL_UP, SectionSymbol.ROLL_DOWN
_UP, _DN = "^", "v"
_HALVES = (
    (tt("\\//\\", 1), (_F, _F), (_UP, _UP)),
    (tt("/\\\\/", -1), (_F, _F), (_DN, _DN)),
    (tt("////", 1), (_U, _U), (_DN, _DN)),
    (tt("\\\\\\\\", -1), (_D, _D), (_UP, _UP)),
    (tt("///\\", 1), (_F, _U), (_UP, _DN)),
    (tt("\\///", 1), (_U, _F), (_DN, _UP)),
    (tt("\\\\\\/", -1), (_F, _D), (_DN, _UP)),
    (tt("/\\\\\\", -1), (_D, _F), (_UP, _DN)),
)


def _candidates(sym: SectionSymbol):
    if sym is _F:
        return [row for row in _HALVES if row[1] == (_F, _F)]
    return [row for row in _HALVES if sym in row[1] and set(row[1]) <= {sym, _F}]


def _diagonal_types(symbols: Sequence[SectionSymbol]) -> List[TileType]:
    """Family-A type per diagonal index (list position = k - k_min).

    Dynamic programming over the admissible types.  Each roll symbol wants
    its rolled halves to face neighbours with the same symbol and its flat
    half to face a change; ties resolve in table order.
    """
    n = len(symbols)

    def cost(k, row):
        sym = symbols[k]
        if sym is _F:
            return 0
        prev = symbols[k - 1] if k > 0 else sym
        nxt = symbols[k + 1] if k < n - 1 else sym
        want_se = sym if prev is sym else _F
        want_nw = sym if nxt is sym else _F
        return (row[1][0] is not want_se) + (row[1][1] is not want_nw)

    best: List[Dict[int, Tuple[int, Optional[int]]]] = []
    cands = [_candidates(sym) for sym in symbols]
    first = {}
    for r, row in enumerate(cands[0]):
        first[r] = (cost(0, row), None)
    best.append(first)
    for k in range(1, n):
        layer = {}
        for r, row in enumerate(cands[k]):
            opts = [
                (best[k - 1][q][0], q)
                for q, prow in enumerate(cands[k - 1])
                if q in best[k - 1] and row[2][0] == prow[2][1]
            ]
            if opts:
                c, q = min(opts)
                layer[r] = (c + cost(k, row), q)
        if not layer:
            raise NftError(f"no admissible type sequence through diagonal {k}")
        best.append(layer)
    r = min(best[-1], key=lambda x: (best[-1][x][0], x))
    out = []
    for k in range(n - 1, -1, -1):
        out.append(cands[k][r][0])
        r = best[k][r][1]
    return out[::-1]


def pattern_from_types(diagonal: Sequence[TileType], family: Family = Family.FAMILY_A,
                       shape: Optional[Tuple[int, int]] = None) -> TypePattern:
    """Spread one type per diagonal index over a ``W x H`` window.

    ``diagonal[m]`` goes to the tiles with ``j - i + W - 1 == m`` (family A)
    or ``i + j == m`` (family B).
    """
    n = len(diagonal)
    if n == 0:
        raise DomainError("empty diagonal sequence")
    if shape is None:
        shape = ((n + 1) // 2, n + 1 - (n + 1) // 2)
    w, h = shape
    if w + h - 1 > n:
        raise DomainError(f"{n} diagonal entries cannot cover a {w}x{h} window")
    sigma = {}
    for i in range(w):
        for j in range(h):
            m = j - i + w - 1 if family is Family.FAMILY_A else i + j
            sigma[(2 * i, 2 * j)] = diagonal[m]
    return TypePattern((w, h), sigma, family)


def pattern_from_section(symbols: Sequence, family: Family = Family.FAMILY_A,
                         shape: Optional[Tuple[int, int]] = None) -> TypePattern:
    """Pattern whose cross-section along the rolling diagonal reads ``symbols``.

    One symbol per tile step along the rolling diagonal.  FLAT runs become
    Z-tiles, interior steps of a roll run become D-tiles and the steps of a
    run touching a flat neighbour become I-tiles with their flat half on
    that side.  Short sequences are padded by repeating the last symbol.
    """
    syms = [s if isinstance(s, SectionSymbol) else SectionSymbol.parse(s) for s in symbols]
    if not syms:
        raise DomainError("empty section")
    if shape is None:
        n = len(syms)
        shape = ((n + 1) // 2, n + 1 - (n + 1) // 2)
    need = shape[0] + shape[1] - 1
    syms = syms + [syms[-1]] * max(0, need - len(syms))
    syms = syms[:need]
    if family is Family.FAMILY_A:
        return pattern_from_types(_diagonal_types(syms), family, shape)
    # build the family-A image in the rotated frame; its diagonal index runs
    # opposite to i + j, so the section is read backwards
    w, h = shape
    a_types = _diagonal_types(syms[::-1])[::-1]
    diag = [rotate_type(t, "CCW") for t in a_types]
    return pattern_from_types(diag, family, shape)


# ---------------------------------------------------------------------------
# realisation


@dataclass
class Deformation:
    """Positions of a finite set of lattice points."""

    points: Dict[Site, np.ndarray]
    theta: float

    @property
    def domain(self) -> frozenset:
        return frozenset(self.points)

    def __getitem__(self, site: Site) -> np.ndarray:
        return self.points[site]

    def get(self, site: Site):
        return self.points.get(site)

    def bounds(self) -> Tuple[int, int, int, int]:
        xs = [x for x, _ in self.points]
        ys = [y for _, y in self.points]
        return min(xs), max(xs), min(ys), max(ys)

    def transformed(self, iso) -> "Deformation":
        return Deformation({k: iso.apply(p) for k, p in self.points.items()}, self.theta)


def realize(p: TypePattern, consts: CellConstants,
            extents: Optional[Tuple[int, int, int, int]] = None) -> Deformation:
    """Place the pattern's tiles, the first one in reference position.

    Each tile is attached to its left neighbour (or, in the first column,
    to the one below); the points it shares with an already placed tile
    must agree.  ``extents = (xmin, xmax, ymin, ymax)`` clips the output.
    """
    placed = {}
    pts: Dict[Site, np.ndarray] = {}
    for site in p.sites():
        s, t = site
        if not placed:
            tile = place(p[site], consts, site=site)
        elif (s - 2, t) in placed:
            tile = attach(placed[(s - 2, t)], p[site], Direction.PLUS_E1)
        else:
            tile = attach(placed[(s, t - 2)], p[site], Direction.PLUS_E2)
        placed[site] = tile
        for k, q in tile.lattice_points().items():
            old = pts.get(k)
            if old is None:
                pts[k] = q
            elif np.linalg.norm(old - q) > CONSTRAINT_TOL:
                raise NftError(
                    f"tile at {site} disagrees with placed geometry at {k} "
                    f"by {np.linalg.norm(old - q):.3e}"
                )
    if extents is not None:
        x0, x1, y0, y1 = extents
        missing = [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1) if (x, y) not in pts]
        if missing:
            raise DomainError(f"extents reach outside the realised window, e.g. {missing[0]}")
        pts = {k: q for k, q in pts.items() if x0 <= k[0] <= x1 and y0 <= k[1] <= y1}
    return Deformation(pts, consts.theta)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class AdmissibilityReport:
    max_bond: float = 0.0
    max_right: float = 0.0
    max_straight: float = 0.0
    bonds: List[Tuple[Site, Site]] = field(default_factory=list)
    right_angles: List[Tuple[Site, Site, Site]] = field(default_factory=list)
    straight_angles: List[Tuple[Site, Site, Site]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.bonds or self.right_angles or self.straight_angles)

    @property
    def worst(self) -> float:
        return max(self.max_bond, self.max_right, self.max_straight)


_STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def verify_admissible(y: Deformation, consts: CellConstants, tol: Optional[float] = None) -> AdmissibilityReport:
    """Unit bonds, angle theta at right-angle triples, delta_theta at straight ones."""
    tol = CONSTRAINT_TOL if tol is None else tol
    rep = AdmissibilityReport()
    P = y.points
    for (x, z), p in P.items():
        for dx, dz in ((1, 0), (0, 1)):
            q = P.get((x + dx, z + dz))
            if q is None:
                continue
            r = abs(float(np.linalg.norm(q - p)) - 1.0)
            rep.max_bond = max(rep.max_bond, r)
            if r > tol:
                rep.bonds.append(((x, z), (x + dx, z + dz)))
        nb = [((x + dx, z + dz), P.get((x + dx, z + dz))) for dx, dz in _STEPS]
        for i in range(4):
            (ka, a), (kb, b) = nb[i], nb[(i + 1) % 4]
            if a is not None and b is not None:
                r = abs(bond_angle(a, p, b) - consts.theta)
                rep.max_right = max(rep.max_right, r)
                if r > tol:
                    rep.right_angles.append((ka, (x, z), kb))
        for i in (0, 1):
            (ka, a), (kb, b) = nb[i], nb[i + 2]
            if a is not None and b is not None:
                r = abs(bond_angle(a, p, b) - consts.delta_theta)
                rep.max_straight = max(rep.max_straight, r)
                if r > tol:
                    rep.straight_angles.append((ka, (x, z), kb))
    return rep


def form_function(y: Deformation) -> Dict[Site, Form]:
    """Form of every cell, keyed by its lower-left lattice corner ``(s, t)``.

    The cell's barycenter is ``(s + 1/2, t + 1/2)``.
    """
    out = {}
    P = y.points
    for (s, t) in P:
        corners = [P.get((s, t)), P.get((s + 1, t)), P.get((s + 1, t + 1)), P.get((s, t + 1))]
        if any(c is None for c in corners):
            continue
        try:
            out[(s, t)] = cell_form(*corners)
        except DegenerateError as exc:
            raise DegenerateError(f"cell with barycenter ({s + 0.5}, {t + 0.5}): {exc}") from None
    return out


@dataclass
class IncidenceField:
    gamma1: Dict[HalfSite, float]
    gamma2: Dict[HalfSite, float]
    skipped: List[HalfSite] = field(default_factory=list)


def signed_incidence(a, b, top, bot) -> float:
    """Signed angle between the planes (a, b, top) and (a, b, bot) hinged on ab."""
    n_top = unit(np.cross(b - a, top - a))
    n_bot = unit(np.cross(a - b, bot - b))
    ang = angle_between(n_top, n_bot)
    return ang if float(np.dot(top - bot, n_top - n_bot)) >= 0.0 else -ang


def incidence_angles(y: Deformation) -> IncidenceField:
    """Signed incidence angles along d1 and d2 for every interior bond.

    For a horizontal bond from ``a = (s, t)`` to ``b = (s + 1, t)`` the upper
    triangle uses ``a + v`` and the lower one ``b - v`` with v = (1, 1) for
    d1 and v = (0, 1) for d2.  Vertical bonds from ``a = (s, t)`` to
    ``b = (s, t + 1)`` use the lattice turned a quarter counterclockwise, so
    the left cell plays the upper one; each triangle is chosen to contain
    the cell diagonal running along the same d_i as in the horizontal case.
    """
    P = y.points
    g1: Dict[HalfSite, float] = {}
    g2: Dict[HalfSite, float] = {}
    skipped: List[HalfSite] = []

    def get(x, z):
        return P.get((x, z))

    for (s, t), a in P.items():
        b = get(s + 1, t)
        if b is not None:
            key = (s + 0.5, float(t))
            legs = [(g1, get(s + 1, t + 1), get(s, t - 1)), (g2, get(s, t + 1), get(s + 1, t - 1))]
            if all(top is not None and bot is not None for _, top, bot in legs):
                for tgt, top, bot in legs:
                    tgt[key] = signed_incidence(a, b, top, bot)
            else:
                skipped.append(key)
        b = get(s, t + 1)
        if b is not None:
            key = (float(s), t + 0.5)
            legs = [(g1, get(s - 1, t), get(s + 1, t + 1)), (g2, get(s - 1, t + 1), get(s + 1, t))]
            if all(top is not None and bot is not None for _, top, bot in legs):
                for tgt, top, bot in legs:
                    tgt[key] = signed_incidence(a, b, top, bot)
            else:
                skipped.append(key)
    return IncidenceField(g1, g2, skipped)


def classify_gamma(value: float, gamma_star: float, band: float = 1e-6) -> Optional[int]:
    """Map an incidence angle to -1, 0 or +1 (units of gamma*); None if anomalous."""
    best = min((-1, 0, 1), key=lambda k: abs(value - k * gamma_star))
    return best if abs(value - best * gamma_star) <= band else None


def section_turning(y: Deformation, start: Site, steps: int, direction: Site = (-1, 1)) -> List[float]:
    """Turning angles of the polygon through ``start + n * direction``."""
    dx, dz = direction
    pts = [y.points[(start[0] + n * dx, start[1] + n * dz)] for n in range(steps + 1)]
    out = []
    for n in range(1, steps):
        out.append(math.pi - bond_angle(pts[n - 1], pts[n], pts[n + 1]))
    return out
