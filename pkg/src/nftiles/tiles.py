"""Combinatorial 4-tile types, their classes and reference-position geometry.

A 4-tile is the 2x2 block of optimal cells around a center C.  Its type
lists the four cell forms in matrix order (UL, UR, LL, LR) together with
sigma = +1 or -1, the side of the middle-point plane the center lies on
(C sits at -sigma*h relative to the middle points in reference position).
"""

from __future__ import annotations

import enum
import itertools
import math
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .errors import DegenerateError, DomainError
from .geom_core import (
    CellConstants,
    Form,
    Isometry,
    angle_between,
    bond_angle,
    cell_form,
    complete_cell,
    nonplanarity_angles,
)

B, S = Form.BACK, Form.SLASH


class Pos(enum.IntEnum):
    UL = 0
    UR = 1
    LL = 2
    LR = 3


class Side(enum.Enum):
    RIGHT = 1
    TOP = 2
    LEFT = 3
    BOTTOM = 4


class TileClass(enum.Enum):
    A = "A"
    I = "I"
    J = "J"
    Z = "Z"
    E = "E"
    D = "D"


class BoundaryKind(enum.Enum):
    Zb = "Zb"
    Db = "Db"
    Eb = "Eb"


class Orientation(enum.Enum):
    UP = "^"
    DOWN = "v"


@dataclass(frozen=True)
class TileType:
    forms: Tuple[Form, Form, Form, Form]
    sigma: int

    def __post_init__(self):
        if self.sigma not in (-1, 1):
            raise DomainError(f"sigma must be +1 or -1, got {self.sigma!r}")
        if len(self.forms) != 4 or not all(isinstance(f, Form) for f in self.forms):
            raise DomainError("forms must be four Form values (UL, UR, LL, LR)")

    def __lt__(self, other):  # enum members do not order; compare by code
        return self.code < other.code

    def form(self, pos: Pos) -> Form:
        return self.forms[pos]

    @property
    def code(self) -> str:
        f = [x.value for x in self.forms]
        return f"[{f[0]}{f[1]} / {f[2]}{f[3]} ; s{self.sigma:+d}]"

    def __str__(self) -> str:
        return self.code

    @classmethod
    def parse(cls, code: str) -> "TileType":
        m = _CODE_RE.fullmatch(code.strip())
        if m is None:
            raise DomainError(f"cannot parse tile code {code!r}")
        forms = tuple(Form.from_char(ch) for ch in m.group(1, 2, 3, 4))
        return cls(forms, int(m.group(5)))


_CODE_RE = re.compile(r"\[([\\/])([\\/]) / ([\\/])([\\/]) ; s([+-]1)\]")


def tt(glyphs: str, sigma: int) -> TileType:
    """Shorthand: ``tt('/\\\\/', -1)`` lists the forms UL, UR, LL, LR."""
    return TileType(tuple(Form.from_char(ch) for ch in glyphs), sigma)


# ---------------------------------------------------------------------------
# symmetry actions


def rotate_type(t: TileType, direction: str = "CW") -> TileType:
    """Type of the tile rotated by pi/2; forms swap, entries permute."""
    a, b, c, d = (f.flipped() for f in t.forms)
    if direction == "CW":
        return TileType((c, a, d, b), t.sigma)
    if direction == "CCW":
        return TileType((b, d, a, c), t.sigma)
    raise DomainError(f"direction must be CW or CCW, got {direction!r}")


def reflect_type(t: TileType) -> TileType:
    return TileType(tuple(f.flipped() for f in t.forms), -t.sigma)


def all_types() -> List[TileType]:
    out = []
    for sigma in (-1, 1):
        for forms in itertools.product((B, S), repeat=4):
            out.append(TileType(forms, sigma))
    return sorted(out, key=lambda x: x.code)


def orbit(t: TileType) -> frozenset:
    seen = {t}
    todo = [t]
    while todo:
        x = todo.pop()
        for y in (rotate_type(x, "CW"), reflect_type(x)):
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return frozenset(seen)


# ---------------------------------------------------------------------------
# corners that leave the middle-point plane
#
# In reference position a corner E_i sits at height 0 ("normal") or far off
# it ("abnormal").  Which one depends on whether the cell folds along the
# diagonal joining the two middle points of that cell.

CORNER_OF = {Pos.UR: 1, Pos.UL: 2, Pos.LL: 3, Pos.LR: 4}
_MM_DIAGONAL = {Pos.UL: S, Pos.UR: B, Pos.LL: B, Pos.LR: S}
SIDE_CORNERS = {
    Side.RIGHT: (Pos.LR, Pos.UR),
    Side.TOP: (Pos.UR, Pos.UL),
    Side.LEFT: (Pos.UL, Pos.LL),
    Side.BOTTOM: (Pos.LL, Pos.LR),
}
SIDE_INDEX = {Side.RIGHT: 1, Side.TOP: 2, Side.LEFT: 3, Side.BOTTOM: 4}


def abnormal_corners(t: TileType) -> Tuple[Pos, ...]:
    out = []
    for p in Pos:
        along_mm = t.forms[p] is _MM_DIAGONAL[p]
        if along_mm == (t.sigma == 1):
            out.append(p)
    return tuple(out)


def corner_marks(t: TileType) -> str:
    """Compass marks of the off-plane corners, e.g. ``'nwd'`` or ``'neswu'``."""
    names = {Pos.UL: "nw", Pos.UR: "ne", Pos.LL: "sw", Pos.LR: "se"}
    ab = abnormal_corners(t)
    if not ab:
        return ""
    order = [Pos.UL, Pos.LR, Pos.UR, Pos.LL]
    return "".join(names[p] for p in order if p in ab) + ("u" if t.sigma == 1 else "d")


def classify(t: TileType) -> TileClass:
    ab = abnormal_corners(t)
    n = len(ab)
    if n == 0:
        return TileClass.Z
    if n == 1:
        return TileClass.I
    if n == 3:
        return TileClass.J
    if n == 4:
        return TileClass.E
    diagonal = set(ab) in ({Pos.UL, Pos.LR}, {Pos.UR, Pos.LL})
    return TileClass.D if diagonal else TileClass.A


def boundary_kind(t: TileType, side: Side) -> BoundaryKind:
    n = sum(p in abnormal_corners(t) for p in SIDE_CORNERS[side])
    return (BoundaryKind.Zb, BoundaryKind.Db, BoundaryKind.Eb)[n]


# Below this angle the raised corner of a D-boundary sits less than twice
# the middle-point height above the base plane, so D-boundaries stop
# reversing the orientation and the combinatorial rule no longer matches
# the geometry.  The crossover is exactly cos(theta) = 1/3.
ORIENTATION_THETA_MIN = math.acos(1.0 / 3.0)


def boundary_orientation(t: TileType, side: Side) -> Orientation:
    """Combinatorial orientation for Z-, D- and I-tiles.

    Normal corners give UP when sigma = +1 and DOWN when sigma = -1; an
    off-plane corner on the side reverses that.  For sides with two
    off-plane corners use the geometric :func:`boundary_signature`.
    Agrees with the geometry only for theta > ORIENTATION_THETA_MIN.
    """
    if boundary_kind(t, side) is BoundaryKind.Eb:
        raise DomainError("orientation of an E-boundary needs geometry")
    flipped = boundary_kind(t, side) is BoundaryKind.Db
    up = (t.sigma == 1) != flipped
    return Orientation.UP if up else Orientation.DOWN


# ---------------------------------------------------------------------------
# tables

# classification, forms in (UL, UR, LL, LR) order
TABLE_CLASSES: Dict[TileClass, Tuple[TileType, ...]] = {
    TileClass.A: (
        tt("\\\\//", -1), tt("/\\/\\", -1), tt("//\\\\", -1), tt("\\/\\/", -1),
        tt("\\\\//", 1), tt("/\\/\\", 1), tt("//\\\\", 1), tt("\\/\\/", 1),
    ),
    TileClass.I: (
        tt("\\\\\\/", -1), tt("//\\/", -1), tt("/\\\\\\", -1), tt("/\\//", -1),
        tt("\\///", 1), tt("\\/\\\\", 1), tt("///\\", 1), tt("\\\\/\\", 1),
    ),
    TileClass.J: (
        tt("\\\\/\\", -1), tt("\\///", -1), tt("\\/\\\\", -1), tt("///\\", -1),
        tt("//\\/", 1), tt("/\\\\\\", 1), tt("/\\//", 1), tt("\\\\\\/", 1),
    ),
    TileClass.Z: (tt("/\\\\/", -1), tt("\\//\\", 1)),
    TileClass.E: (tt("\\//\\", -1), tt("/\\\\/", 1)),
    TileClass.D: (tt("\\\\\\\\", -1), tt("////", -1), tt("\\\\\\\\", 1), tt("////", 1)),
}

# admissible Z/D/I types with boundary orientations listed as
# (RIGHT, BOTTOM, LEFT, TOP), in the row order used for every table
_U, _D = Orientation.UP, Orientation.DOWN
ORIENTATION_TABLE: Tuple[Tuple[TileType, Tuple[Orientation, ...], str], ...] = (
    (tt("/\\\\/", -1), (_D, _D, _D, _D), ""),
    (tt("\\//\\", 1), (_U, _U, _U, _U), ""),
    (tt("\\\\\\\\", -1), (_U, _U, _U, _U), "nwsed"),
    (tt("////", -1), (_U, _U, _U, _U), "neswd"),
    (tt("////", 1), (_D, _D, _D, _D), "nwseu"),
    (tt("\\\\\\\\", 1), (_D, _D, _D, _D), "neswu"),
    (tt("\\\\\\/", -1), (_D, _D, _U, _U), "nwd"),
    (tt("//\\/", -1), (_U, _D, _D, _U), "ned"),
    (tt("/\\\\\\", -1), (_U, _U, _D, _D), "sed"),
    (tt("/\\//", -1), (_D, _U, _U, _D), "swd"),
    (tt("\\///", 1), (_D, _D, _U, _U), "seu"),
    (tt("\\/\\\\", 1), (_U, _D, _D, _U), "swu"),
    (tt("///\\", 1), (_U, _U, _D, _D), "nwu"),
    (tt("\\\\/\\", 1), (_D, _U, _U, _D), "neu"),
)
TABLE_SIDES = (Side.RIGHT, Side.BOTTOM, Side.LEFT, Side.TOP)

ZDI_TYPES: Tuple[TileType, ...] = tuple(row[0] for row in ORIENTATION_TABLE)

# the two admissible families; A rolls along d2, B along d1
FAMILY_A: Tuple[TileType, ...] = (
    tt("/\\\\/", -1), tt("\\//\\", 1), tt("////", 1), tt("\\\\\\\\", -1),
    tt("\\\\\\/", -1), tt("/\\\\\\", -1), tt("\\///", 1), tt("///\\", 1),
)
FAMILY_B: Tuple[TileType, ...] = (
    tt("/\\\\/", -1), tt("\\//\\", 1), tt("\\\\\\\\", 1), tt("////", -1),
    tt("//\\/", -1), tt("/\\//", -1), tt("\\/\\\\", 1), tt("\\\\/\\", 1),
)

# vertical matching sets: (upper tile set, lower tile set)
M1_SETS = (
    frozenset({tt("/\\\\/", -1), tt("////", 1), tt("\\\\\\/", -1), tt("\\///", 1)}),
    frozenset({tt("/\\\\/", -1), tt("////", 1), tt("/\\\\\\", -1), tt("///\\", 1)}),
)
M2_SETS = (
    frozenset({tt("\\//\\", 1), tt("\\\\\\\\", -1), tt("/\\\\\\", -1), tt("///\\", 1)}),
    frozenset({tt("\\//\\", 1), tt("\\\\\\\\", -1), tt("\\\\\\/", -1), tt("\\///", 1)}),
)


def table_order_key(t: TileType) -> Tuple[int, str]:
    """Z/D/I types in orientation-table order, everything else after by code."""
    try:
        return (ZDI_TYPES.index(t), t.code)
    except ValueError:
        return (len(ZDI_TYPES), t.code)


# ---------------------------------------------------------------------------
# geometry

# lattice offsets of the nine points of a tile relative to its center
OFFSETS = {
    "C": (0, 0),
    "M1": (1, 0), "M2": (0, 1), "M3": (-1, 0), "M4": (0, -1),
    "E1": (1, 1), "E2": (-1, 1), "E3": (-1, -1), "E4": (1, -1),
}

# cells as (lower-left, lower-right, upper-right, upper-left) offsets
CELL_CORNERS = {
    Pos.UR: ((0, 0), (1, 0), (1, 1), (0, 1)),
    Pos.UL: ((-1, 0), (0, 0), (0, 1), (-1, 1)),
    Pos.LL: ((-1, -1), (0, -1), (0, 0), (-1, 0)),
    Pos.LR: ((0, -1), (1, -1), (1, 0), (0, 0)),
}


@dataclass(frozen=True, eq=False)
class FourTile:
    """Nine points of a 4-tile, keyed by lattice offset from the center."""

    center: np.ndarray
    middles: np.ndarray  # M1..M4
    corners: np.ndarray  # E1..E4
    tile_type: TileType
    consts: CellConstants

    def points(self) -> Dict[Tuple[int, int], np.ndarray]:
        out = {(0, 0): self.center}
        for i, off in enumerate(((1, 0), (0, 1), (-1, 0), (0, -1))):
            out[off] = self.middles[i]
        for i, off in enumerate(((1, 1), (-1, 1), (-1, -1), (1, -1))):
            out[off] = self.corners[i]
        return out

    def M(self, i: int) -> np.ndarray:
        return self.middles[(i - 1) % 4]

    def E(self, i: int) -> np.ndarray:
        return self.corners[(i - 1) % 4]

    def transformed(self, iso: Isometry) -> "FourTile":
        return FourTile(
            iso.apply(self.center), iso.apply(self.middles), iso.apply(self.corners),
            self.tile_type, self.consts,
        )

    def boundary_triple(self, side: Side) -> np.ndarray:
        """(E_{i-1}, M_i, E_i) for the side with middle point M_i."""
        i = SIDE_INDEX[side]
        return np.array([self.E(i - 1), self.M(i), self.E(i)])


def _require_nonflat(consts: CellConstants) -> None:
    if consts.flat or consts.theta >= math.pi / 2:
        raise DegenerateError("sigma is undefined for flat cells (theta = pi/2)")


def reference_tile(tile_type: TileType, consts: CellConstants) -> FourTile:
    return _reference_tile_cached(tile_type, consts)


@lru_cache(maxsize=4096)
def _reference_tile_cached(tile_type: TileType, consts: CellConstants) -> FourTile:
    _require_nonflat(consts)
    s, h, sig = consts.s, consts.h, tile_type.sigma
    pts: Dict[Tuple[int, int], np.ndarray] = {
        (0, 0): np.zeros(3),
        (1, 0): np.array([s, 0.0, sig * h]),
        (0, 1): np.array([0.0, s, sig * h]),
        (-1, 0): np.array([-s, 0.0, sig * h]),
        (0, -1): np.array([0.0, -s, sig * h]),
    }
    for pos, cell in CELL_CORNERS.items():
        corners = [pts.get(off) for off in cell]
        missing = [off for off in cell if off not in pts][0]
        pts[missing] = complete_cell(corners, tile_type.forms[pos], consts)
    tile = FourTile(
        pts[(0, 0)],
        np.array([pts[(1, 0)], pts[(0, 1)], pts[(-1, 0)], pts[(0, -1)]]),
        np.array([pts[(1, 1)], pts[(-1, 1)], pts[(-1, -1)], pts[(1, -1)]]),
        tile_type,
        consts,
    )
    for a in (tile.center, tile.middles, tile.corners):
        a.setflags(write=False)
    return tile


def measure_type(points: Dict[Tuple[int, int], np.ndarray], center=(0, 0)) -> TileType:
    """Read the type of the 4-tile centred at ``center`` off placed points."""
    cx, cy = center

    def P(dx, dy):
        return np.asarray(points[(cx + dx, cy + dy)], dtype=float)

    forms = []
    for pos in Pos:
        forms.append(cell_form(*(P(*off) for off in CELL_CORNERS[pos])))
    c = P(0, 0)
    mean_m = (P(1, 0) + P(0, 1) + P(-1, 0) + P(0, -1)) / 4.0
    nrm = np.cross(P(1, 0) - c, P(0, 1) - c)
    lift = float(np.dot(mean_m - c, nrm))
    if lift == 0.0:
        raise DegenerateError("center lies in the middle-point plane")
    return TileType(tuple(forms), 1 if lift > 0 else -1)


@dataclass(frozen=True)
class BoundarySignature:
    side: Side
    kind: BoundaryKind
    orientation: Orientation
    angle: float


def boundary_signature(tile: FourTile, side: Side, tol: float = 1e-12) -> BoundarySignature:
    """Orientation and angle of one side, measured on reference geometry."""
    e_prev, m, e_next = tile.boundary_triple(side)
    # orientation is defined in reference position; the tile is normalised
    # by reading heights along the middle-plane normal of this very tile
    mid = tile.middles.mean(axis=0)
    up = np.cross(tile.M(1) - tile.M(3), tile.M(2) - tile.M(4))
    up = up / np.linalg.norm(up)
    gap = float(np.dot(m - mid, up)) - 0.5 * float(np.dot(e_prev + e_next - 2 * mid, up))
    if abs(gap) <= tol:
        raise DegenerateError(f"boundary orientation undecided on side {side.name}")
    orient = Orientation.UP if gap > 0 else Orientation.DOWN
    return BoundarySignature(side, boundary_kind(tile.tile_type, side), orient, bond_angle(e_prev, m, e_next))


def nonplanarity(tile: FourTile) -> Tuple[float, float]:
    return nonplanarity_angles(tile.center, tile.middles)


def gamma_star(consts: CellConstants) -> float:
    """Magnitude of the d2 incidence angle inside a D-tile.

    Bond C-M1 of the all-SLASH D-tile with sigma = +1: the upper plane is
    spanned by C, M1, M2 and the lower one by C, M1, E4.
    """
    _require_nonflat(consts)
    tile = reference_tile(tt("////", 1), consts)
    c, m1, m2, e4 = tile.center, tile.M(1), tile.M(2), tile.E(4)
    n_top = np.cross(m1 - c, m2 - c)
    n_bot = np.cross(c - m1, e4 - m1)
    return angle_between(n_top, n_bot)


def with_gamma_star(consts: CellConstants) -> CellConstants:
    if consts.gamma_star is not None:
        return consts
    return replace(consts, gamma_star=gamma_star(consts))


def types_in(classes: Iterable[TileClass]) -> List[TileType]:
    wanted = set(classes)
    return [t for t in all_types() if classify(t) in wanted]
