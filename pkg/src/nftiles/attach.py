"""Attaching 4-tiles to each other and judging 2x2 arrangements.

Tiles live on the coarse lattice of centers: a tile at site (i, j) covers
lattice points (i-1..i+1, j-1..j+1), and its right neighbour sits at
(i+2, j).  Two attached tiles share three points; the 4-tile centred on
the shared middle point is the *middle tile*.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import AttachError, DegenerateError, DomainError
from .geom_core import CellConstants, Isometry, align_triples, bond_angle, nonplanarity_angles
from .tiles import (
    BoundaryKind,
    FourTile,
    Orientation,
    Side,
    TileClass,
    TileType,
    ZDI_TYPES,
    boundary_kind,
    boundary_orientation,
    boundary_signature,
    classify,
    measure_type,
    reference_tile,
    table_order_key,
    tt,
)

ATTACH_TOL = 1e-9

Site = Tuple[int, int]


class Direction(enum.Enum):
    PLUS_E1 = (1, 0)
    MINUS_E1 = (-1, 0)
    PLUS_E2 = (0, 1)
    MINUS_E2 = (0, -1)

    @property
    def step(self) -> Site:
        return self.value

    @property
    def label(self) -> str:
        return {"PLUS_E1": "+e1", "MINUS_E1": "-e1", "PLUS_E2": "+e2", "MINUS_E2": "-e2"}[self.name]


# side of the base tile facing each direction, and the new tile's side facing back
_FACING = {
    Direction.PLUS_E1: (Side.RIGHT, Side.LEFT),
    Direction.MINUS_E1: (Side.LEFT, Side.RIGHT),
    Direction.PLUS_E2: (Side.TOP, Side.BOTTOM),
    Direction.MINUS_E2: (Side.BOTTOM, Side.TOP),
}


class Reason(enum.Enum):
    OK = "OK"
    ORIENTATION_MISMATCH = "ORIENTATION_MISMATCH"
    ANGLE_MISMATCH = "ANGLE_MISMATCH"
    MIDDLE_NOT_COPLANAR = "MIDDLE_NOT_COPLANAR"


@dataclass(frozen=True)
class AttachVerdict:
    ok: bool
    reason: Reason
    middle_type: Optional[TileType] = None

    def __post_init__(self):
        if self.ok != (self.reason is Reason.OK) or self.ok != (self.middle_type is not None):
            raise DomainError("inconsistent verdict")


@dataclass(frozen=True, eq=False)
class PlacedTile:
    tile: FourTile
    pose: Isometry = field(default_factory=Isometry.identity)
    site: Site = (0, 0)

    @property
    def tile_type(self) -> TileType:
        return self.tile.tile_type

    def world(self) -> FourTile:
        return self.tile.transformed(self.pose)

    def lattice_points(self) -> Dict[Site, np.ndarray]:
        i, j = self.site
        return {(i + dx, j + dy): p for (dx, dy), p in self.world().points().items()}


def place(tile_type: TileType, consts: CellConstants, pose: Optional[Isometry] = None, site: Site = (0, 0)) -> PlacedTile:
    return PlacedTile(reference_tile(tile_type, consts), pose or Isometry.identity(), site)


def _shared_offsets(direction: Direction):
    """Pairs (base offset, new offset) of the three shared lattice points."""
    dx, dy = direction.step
    if dx:
        base = [(dx, 1), (dx, 0), (dx, -1)]
    else:
        base = [(1, dy), (0, dy), (-1, dy)]
    return [(o, (o[0] - 2 * dx, o[1] - 2 * dy)) for o in base]


# ---------------------------------------------------------------------------
# combinatorial side


def middle_tile_type(left: TileType, right: TileType, direction: str = "E1") -> TileType:
    """Type of the tile centred on the shared middle point.

    For E1 ``left`` sits left of ``right``; for E2 ``left`` is the lower
    tile and ``right`` the upper one.
    """
    if direction == "E1":
        o1 = boundary_orientation(left, Side.RIGHT)
        o2 = boundary_orientation(right, Side.LEFT)
        forms = (left.forms[1], right.forms[0], left.forms[3], right.forms[2])
    elif direction == "E2":
        o1 = boundary_orientation(left, Side.TOP)
        o2 = boundary_orientation(right, Side.BOTTOM)
        forms = (right.forms[2], right.forms[3], left.forms[0], left.forms[1])
    else:
        raise DomainError(f"direction must be E1 or E2, got {direction!r}")
    if o1 is not o2:
        raise AttachError(Reason.ORIENTATION_MISMATCH.value, f"{left} / {right} along {direction}")
    return TileType(forms, -1 if o1 is Orientation.UP else 1)


def predicted_verdict(left: TileType, right: TileType, direction: str = "E1") -> AttachVerdict:
    """Verdict from the boundary kinds and orientations alone."""
    s1, s2 = (Side.RIGHT, Side.LEFT) if direction == "E1" else (Side.TOP, Side.BOTTOM)
    if BoundaryKind.Eb in (boundary_kind(left, s1), boundary_kind(right, s2)):
        return AttachVerdict(False, Reason.ANGLE_MISMATCH)
    try:
        mid = middle_tile_type(left, right, direction)
    except AttachError:
        return AttachVerdict(False, Reason.ORIENTATION_MISMATCH)
    return AttachVerdict(True, Reason.OK, mid)


# ---------------------------------------------------------------------------
# geometric side


def _middle_residual(pts: Dict[Site, np.ndarray], center: Site, consts: CellConstants) -> float:
    cx, cy = center
    mids = [pts[(cx + 1, cy)], pts[(cx, cy + 1)], pts[(cx - 1, cy)], pts[(cx, cy - 1)]]
    d13, d24 = nonplanarity_angles(pts[center], mids)
    return max(abs(d13 - consts.delta_theta), abs(d24 - consts.delta_theta))


def _candidate_poses(base_ref: FourTile, new_ref: FourTile, direction: Direction):
    pairs = _shared_offsets(direction)
    bp, np_ = base_ref.points(), new_ref.points()
    dst = [bp[a] for a, _ in pairs]
    src = [np_[b] for _, b in pairs]
    return {br: align_triples(src, dst, br) for br in ("PROPER", "MIRROR")}


@lru_cache(maxsize=8192)
def relative_pose(base_type: TileType, new_type: TileType, direction: Direction, consts: CellConstants) -> Isometry:
    """Pose of the new tile in the reference frame of the base tile.

    Raises :class:`AttachError` with the failing reason.
    """
    base_ref = reference_tile(base_type, consts)
    new_ref = reference_tile(new_type, consts)
    s_base, s_new = _FACING[direction]
    sig_b = boundary_signature(base_ref, s_base)
    sig_n = boundary_signature(new_ref, s_new)
    if (abs(sig_b.angle - sig_n.angle) > ATTACH_TOL
            or abs(sig_b.angle - consts.delta_theta) > ATTACH_TOL):
        raise AttachError(Reason.ANGLE_MISMATCH.value,
                          f"boundary angles {sig_b.angle:.12g} vs {sig_n.angle:.12g}")
    if sig_b.orientation is not sig_n.orientation:
        raise AttachError(Reason.ORIENTATION_MISMATCH.value,
                          f"{sig_b.orientation.name} vs {sig_n.orientation.name}")
    return _select_branch(base_ref, new_ref, direction, consts)


def _select_branch(base_ref: FourTile, new_ref: FourTile, direction: Direction, consts: CellConstants) -> Isometry:
    dx, dy = direction.step
    good = []
    for branch, iso in _candidate_poses(base_ref, new_ref, direction).items():
        pts = dict(base_ref.points())
        for (ox, oy), p in new_ref.transformed(iso).points().items():
            pts.setdefault((ox + 2 * dx, oy + 2 * dy), p)
        # an improper pose realises the reflected type, never the requested one
        try:
            realised = measure_type({k: v for k, v in new_ref.transformed(iso).points().items()})
        except DegenerateError:
            continue
        if realised != new_ref.tile_type:
            continue
        if _middle_residual(pts, (dx, dy), consts) <= ATTACH_TOL:
            good.append(iso)
    if not good:
        raise AttachError("NO_COPLANAR_BRANCH", "middle tile is not coplanar")
    if len(good) > 1:
        raise AttachError("AMBIGUOUS_BRANCH", "both branches give a coplanar middle tile")
    return good[0]


def attach(base: PlacedTile, new_type: TileType, direction: Direction) -> PlacedTile:
    consts = base.tile.consts
    rel = relative_pose(base.tile_type, new_type, direction, consts)
    dx, dy = direction.step
    site = (base.site[0] + 2 * dx, base.site[1] + 2 * dy)
    return PlacedTile(reference_tile(new_type, consts), base.pose.compose(rel), site)


def geometric_verdict(left: TileType, right: TileType, direction: str, consts: CellConstants) -> AttachVerdict:
    """Attach by alignment only and read the middle tile off the geometry.

    No orientation bookkeeping is consulted: the new tile is pinned by
    the proper alignment of the shared triple, then the middle tile is
    checked for coplanarity and its type measured.
    """
    d = Direction.PLUS_E1 if direction == "E1" else Direction.PLUS_E2
    base_ref = reference_tile(left, consts)
    new_ref = reference_tile(right, consts)
    s_base, s_new = _FACING[d]
    a_b = boundary_signature(base_ref, s_base).angle
    a_n = boundary_signature(new_ref, s_new).angle
    if abs(a_b - a_n) > ATTACH_TOL or abs(a_b - consts.delta_theta) > ATTACH_TOL:
        return AttachVerdict(False, Reason.ANGLE_MISMATCH)
    iso = _candidate_poses(base_ref, new_ref, d)["PROPER"]
    dx, dy = d.step
    pts = dict(base_ref.points())
    for (ox, oy), p in new_ref.transformed(iso).points().items():
        pts.setdefault((ox + 2 * dx, oy + 2 * dy), p)
    if _middle_residual(pts, (dx, dy), consts) > ATTACH_TOL:
        return AttachVerdict(False, Reason.MIDDLE_NOT_COPLANAR)
    return AttachVerdict(True, Reason.OK, measure_type(pts, center=(dx, dy)))


def attach_verdict(left: TileType, right: TileType, direction: str, consts: CellConstants) -> AttachVerdict:
    """Verdict of the attachment routine itself (signatures, then branch)."""
    d = Direction.PLUS_E1 if direction == "E1" else Direction.PLUS_E2
    try:
        rel = relative_pose(left, right, d, consts)
    except AttachError as exc:
        if exc.reason in ("NO_COPLANAR_BRANCH", "AMBIGUOUS_BRANCH"):
            return AttachVerdict(False, Reason.MIDDLE_NOT_COPLANAR)
        return AttachVerdict(False, Reason(exc.reason))
    dx, dy = d.step
    pts = dict(reference_tile(left, consts).points())
    for (ox, oy), p in reference_tile(right, consts).transformed(rel).points().items():
        pts.setdefault((ox + 2 * dx, oy + 2 * dy), p)
    return AttachVerdict(True, Reason.OK, measure_type(pts, center=(dx, dy)))


@dataclass(frozen=True)
class TableRow:
    left_type: TileType
    right_type: TileType
    direction: str
    verdict: AttachVerdict


def pairwise_table(consts: CellConstants, types: Optional[Sequence[TileType]] = None) -> List[TableRow]:
    """Verdicts for every ordered pair and both directions.

    Ordered by (left, right, direction) with types in orientation-table order.
    """
    types = list(ZDI_TYPES if types is None else types)
    types.sort(key=table_order_key)
    rows = []
    for a, b in itertools.product(types, repeat=2):
        for direction in ("E1", "E2"):
            rows.append(TableRow(a, b, direction, attach_verdict(a, b, direction, consts)))
    return rows


# ---------------------------------------------------------------------------
# 2x2 arrangements, layout  A D / B C


class ArrangementReason(enum.Enum):
    OK = "OK"
    NONADMISSIBLE_CLASS = "NONADMISSIBLE_CLASS"
    NONADMISSIBLE_MIDDLE = "NONADMISSIBLE_MIDDLE"
    PAIR_MISMATCH = "PAIR_MISMATCH"
    CORNER_GAP = "CORNER_GAP"
    NOT_COPLANAR = "NOT_COPLANAR"


@dataclass
class ArrangementVerdict:
    admissible: bool
    reason: ArrangementReason
    detail: str = ""
    gap: float = 0.0
    points: Optional[Dict[Site, np.ndarray]] = None


_ADMISSIBLE_CLASSES = {TileClass.Z, TileClass.D, TileClass.I}

# centers of the five tiles straddling the placed ones (B sits at the origin)
MIDDLE_CENTERS = ((1, 0), (0, 1), (2, 1), (1, 2), (1, 1))


def place_square(types: Sequence[TileType], consts: CellConstants):
    """Place B at the origin, then C, A, and D twice (via A and via C).

    Returns the placed tiles (A, B, C) plus both placements of D.
    """
    a_t, d_t, b_t, c_t = types
    b = place(b_t, consts)
    c = attach(b, c_t, Direction.PLUS_E1)
    a = attach(b, a_t, Direction.PLUS_E2)
    d_via_a = attach(a, d_t, Direction.PLUS_E1)
    d_via_c = attach(c, d_t, Direction.PLUS_E2)
    return a, b, c, d_via_a, d_via_c


def square_arrangement_verdict(types: Sequence[TileType], consts: CellConstants) -> ArrangementVerdict:
    """Try to realise the 2x2 arrangement ``(A, D, B, C)`` (rows A D / B C)."""
    types = tuple(types)
    if len(types) != 4:
        raise DomainError("need four types in the order A, D, B, C")
    bad = [t for t in types if classify(t) not in _ADMISSIBLE_CLASSES]
    if bad:
        return ArrangementVerdict(False, ArrangementReason.NONADMISSIBLE_CLASS,
                                  "class " + ",".join(classify(t).value for t in bad))
    try:
        a, b, c, d1, d2 = place_square(types, consts)
    except AttachError as exc:
        return ArrangementVerdict(False, ArrangementReason.PAIR_MISMATCH, exc.reason)
    w1, w2 = d1.world(), d2.world()
    gap = float(max(np.max(np.linalg.norm(w1.middles - w2.middles, axis=1)),
                    np.max(np.linalg.norm(w1.corners - w2.corners, axis=1)),
                    np.linalg.norm(w1.center - w2.center)))
    if gap > ATTACH_TOL:
        return ArrangementVerdict(False, ArrangementReason.CORNER_GAP,
                                  "D placed via A and via C disagree", gap)
    pts: Dict[Site, np.ndarray] = {}
    for t in (a, b, c, d1):
        for k, p in t.lattice_points().items():
            pts.setdefault(k, p)
    worst = _patch_residual(pts, consts)
    if worst > ATTACH_TOL:
        return ArrangementVerdict(False, ArrangementReason.NOT_COPLANAR,
                                  f"interior residual {worst:.3e}", gap, pts)
    # every 4-tile of the patch counts, not only the four placed ones
    for center in MIDDLE_CENTERS:
        mt = measure_type(pts, center)
        if classify(mt) not in _ADMISSIBLE_CLASSES:
            return ArrangementVerdict(False, ArrangementReason.NONADMISSIBLE_MIDDLE,
                                      f"{classify(mt).value}-tile {mt} centred at {center}", gap, pts)
    return ArrangementVerdict(True, ArrangementReason.OK, "", gap, pts)


def _patch_residual(pts: Dict[Site, np.ndarray], consts: CellConstants) -> float:
    """Worst bond, right-angle and straight-angle residual over a point patch.

    Every lattice triple present in the patch is checked, including the
    straight ones running along the rim.
    """
    worst = 0.0
    for (x, y), p in pts.items():
        for dx, dy in ((1, 0), (0, 1)):
            q = pts.get((x + dx, y + dy))
            if q is not None:
                worst = max(worst, abs(float(np.linalg.norm(q - p)) - 1.0))
        nb = [pts.get((x + 1, y)), pts.get((x, y + 1)), pts.get((x - 1, y)), pts.get((x, y - 1))]
        for i in range(4):
            u, w = nb[i], nb[(i + 1) % 4]
            if u is not None and w is not None:
                worst = max(worst, abs(bond_angle(u, p, w) - consts.theta))
        for u, w in ((nb[0], nb[2]), (nb[1], nb[3])):
            if u is not None and w is not None:
                worst = max(worst, abs(bond_angle(u, p, w) - consts.delta_theta))
    return worst


def characterized_admissible(types: Sequence[TileType]) -> bool:
    """Closed-form membership test for admissible 2x2 arrangements.

    All four tiles in family A with B = D and matching vertical pairs, or
    the quarter-turn image of that for family B.
    """
    from .tiles import FAMILY_A, FAMILY_B, M1_SETS, M2_SETS, rotate_type

    def family_a_ok(a, d, b, c):
        if not all(t in FAMILY_A for t in (a, d, b, c)):
            return False
        if b != d:
            return False
        for upper, lower in ((a, b), (d, c)):
            for up_set, low_set in (M1_SETS, M2_SETS):
                if (upper in up_set) != (lower in low_set):
                    return False
        return True

    a, d, b, c = types
    if family_a_ok(a, d, b, c):
        return True
    if all(t in FAMILY_B for t in types):
        # clockwise quarter turn: rows A D / B C become B A / C D
        r = [rotate_type(t, "CW") for t in (a, d, b, c)]
        ra, rd, rb, rc = r
        return family_a_ok(rb, ra, rc, rd)
    return False


def local_squares(consts: CellConstants, types: Optional[Sequence[TileType]] = None) -> frozenset:
    """All 2x2 windows ``(A, D, B, C)`` realisable on their own 5x5 patch.

    Pairs are pruned with the combinatorial verdict before any geometry.
    """
    from .tiles import ZDI_TYPES
    pool = tuple(types) if types is not None else ZDI_TYPES
    found = set()
    for combo in itertools.product(pool, repeat=4):
        a, d, b, c = combo
        if not (predicted_verdict(b, c, "E1").ok and predicted_verdict(a, d, "E1").ok
                and predicted_verdict(b, a, "E2").ok and predicted_verdict(c, d, "E2").ok):
            continue
        if square_arrangement_verdict(combo, consts).admissible:
            found.add(combo)
    return frozenset(found)


def extendable_squares(squares: frozenset) -> frozenset:
    """Largest subset whose windows each sit in every corner of a 3x3 block.

    A 3x3 block of tiles is valid when its four overlapping windows all
    belong to the current set; windows failing any corner are dropped and
    the pruning repeats until nothing changes.  Poses and point triples of
    a 3x3 block are covered by its four windows, so no new geometry is
    needed.
    """
    current = set(squares)
    while True:
        by_left = {}
        by_top = {}
        for w in current:
            by_left.setdefault((w[0], w[2]), []).append(w)
            by_top.setdefault((w[0], w[1]), []).append(w)
        seen = [set(), set(), set(), set()]
        for w00 in current:
            for w01 in by_left.get((w00[1], w00[3]), ()):
                for w10 in by_top.get((w00[2], w00[3]), ()):
                    for w11 in by_top.get((w01[2], w01[3]), ()):
                        if w11[2] != w10[3]:
                            continue
                        for k, w in enumerate((w00, w01, w10, w11)):
                            seen[k].add(w)
        kept = set.intersection(*seen)
        if kept == current:
            return frozenset(kept)
        current = kept


# rows A D / B C of the I-tile window whose corner distance cannot close
GAP_IV_WINDOW = (
    TileType.parse("[// / \\/ ; s-1]"),
    TileType.parse("[\\/ / // ; s+1]"),
    TileType.parse("[// / /\\ ; s+1]"),
    TileType.parse("[/\\ / // ; s-1]"),
)


def gap_iv_excess(consts: CellConstants) -> Tuple[float, float]:
    """Squared-distance excess of the two points the top-right tile must bridge.

    B sits in reference position, C is attached on its right and A on top.
    The right middle point of A and the upper middle point of C would have
    to be a cell diagonal 2v apart inside D.  Returns ``(excess, closed)``
    with ``excess = |Q - P|^2 - (2v)^2`` from the placed geometry and
    ``closed = 4 d^2 sin^2(2 kappa)``.  Poses are fixed by shared triples
    and type checks only, so the value is defined for every non-flat theta.
    """
    a_t, _, b_t, c_t = GAP_IV_WINDOW
    b_ref = reference_tile(b_t, consts)
    pose_c = _select_branch(b_ref, reference_tile(c_t, consts), Direction.PLUS_E1, consts)
    pose_a = _select_branch(b_ref, reference_tile(a_t, consts), Direction.PLUS_E2, consts)
    q = reference_tile(a_t, consts).transformed(pose_a).M(1)
    p = reference_tile(c_t, consts).transformed(pose_c).M(2)
    excess = float(np.dot(q - p, q - p)) - (2.0 * consts.v) ** 2
    closed = 4.0 * consts.d ** 2 * math.sin(2.0 * consts.kappa) ** 2
    return excess, closed


# ---------------------------------------------------------------------------
# transcribed case tables for the rolling-direction case analysis

# two tiles attached on top of the pair  D[////]+ | I[//\/]-
CASE4_BOTTOM = (tt("////", 1), tt("//\\/", -1))
# rows: (on top of left, on top of right, middle between them,
#        middle left (vertical), middle right (vertical)) -- None where blank
CASE4_ROWS = (
    (tt("//\\/", -1), tt("\\//\\", 1), tt("/\\//", -1), None, None),
    (tt("//\\/", -1), tt("////", -1), tt("////", -1), None, None),
    (tt("//\\/", -1), tt("/\\//", -1), tt("////", -1), None, None),
    (tt("//\\/", -1), tt("\\\\/\\", 1), tt("/\\//", -1), None, None),
    (tt("/\\\\/", -1), tt("///\\", 1), tt("\\///", 1), tt("\\///", 1), tt("/\\//", -1)),
    (tt("////", 1), tt("///\\", 1), tt("////", 1), tt("////", 1), tt("/\\//", -1)),
    (tt("\\\\\\/", -1), tt("///\\", 1), tt("\\///", 1), tt("\\///", 1), tt("/\\//", -1)),
    (tt("\\///", 1), tt("///\\", 1), tt("////", 1), tt("////", 1), tt("/\\//", -1)),
)

# the pair  I[///\]+ | I[/\//]-  and the tiles that may sit on top of each
CASE6_BOTTOM = (tt("///\\", 1), tt("/\\//", -1))
CASE6_LEFT_TOPS = (tt("/\\\\/", -1), tt("////", 1), tt("\\\\\\/", -1), tt("//\\/", -1), tt("\\///", 1))
CASE6_RIGHT_TOPS = (tt("/\\\\/", -1), tt("\\\\\\\\", 1), tt("//\\/", -1), tt("\\///", 1), tt("\\/\\\\", 1))
CASE6_LEFT_MIDDLES = frozenset({tt("\\///", 1), tt("////", 1)})
CASE6_RIGHT_MIDDLES = frozenset({tt("\\//\\", 1), tt("\\\\/\\", 1), tt("///\\", 1)})


@dataclass(frozen=True)
class TableCheck:
    table: str
    row: int
    column: str
    expected: str
    computed: str

    @property
    def ok(self) -> bool:
        return self.expected == self.computed


def _mid(a: TileType, b: TileType, direction: str, consts: Optional[CellConstants]) -> str:
    verdict = attach_verdict(a, b, direction, consts) if consts is not None else predicted_verdict(a, b, direction)
    return verdict.middle_type.code if verdict.ok else verdict.reason.value


def check_case_tables(consts: Optional[CellConstants] = None) -> List[TableCheck]:
    """Recompute every entry of the two case tables.

    With ``consts`` the middles come from the geometric attachment,
    otherwise from boundary orientations alone.
    """
    out = []
    bl, br = CASE4_BOTTOM
    for k, (a, b, mid, ml, mr) in enumerate(CASE4_ROWS, start=1):
        out.append(TableCheck("case4", k, "middle", mid.code, _mid(a, b, "E1", consts)))
        if ml is not None:
            out.append(TableCheck("case4", k, "middle_left", ml.code, _mid(bl, a, "E2", consts)))
            out.append(TableCheck("case4", k, "middle_right", mr.code, _mid(br, b, "E2", consts)))
    for side, bottom, tops, mids in (("left", CASE6_BOTTOM[0], CASE6_LEFT_TOPS, CASE6_LEFT_MIDDLES),
                                     ("right", CASE6_BOTTOM[1], CASE6_RIGHT_TOPS, CASE6_RIGHT_MIDDLES)):
        got = sorted({_mid(bottom, t, "E2", consts) for t in tops})
        out.append(TableCheck("case6", 0, f"middles_{side}", " ".join(sorted(m.code for m in mids)), " ".join(got)))
    return out
