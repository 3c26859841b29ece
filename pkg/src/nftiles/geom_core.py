"""Vector primitives and the geometry of a single optimal cell.

All lengths are in units of the bond length, so neighbouring lattice
points sit at distance one after deformation.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConstraintError, DegenerateError, DomainError

logger = logging.getLogger(__name__)

# constraint acceptance / self-consistency identities
CONSTRAINT_TOL = 1e-9
IDENTITY_TOL = 1e-12

# below this the closed forms still work, but nothing downstream is validated
VALIDATED_THETA_MIN = 1.0


def set_tolerances(constraint: Optional[float] = None, identity: Optional[float] = None) -> None:
    """Override the global geometric tolerances."""
    global CONSTRAINT_TOL, IDENTITY_TOL
    if constraint is not None:
        CONSTRAINT_TOL = float(constraint)
    if identity is not None:
        IDENTITY_TOL = float(identity)


def as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise DomainError(f"non-finite point {a}")
    return a


class Form(enum.Enum):
    """Which diagonal of an optimal cell is folded upward."""

    BACK = "\\"
    SLASH = "/"

    def flipped(self) -> "Form":
        return Form.SLASH if self is Form.BACK else Form.BACK

    @classmethod
    def from_char(cls, ch: str) -> "Form":
        for f in cls:
            if f.value == ch:
                return f
        raise DomainError(f"unknown form glyph {ch!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CellConstants:
    """Scalars derived from the cell angle ``theta``.

    ``gamma_star`` stays ``None`` until :func:`nftiles.tiles.with_gamma_star`
    fills it in.
    """

    theta: float
    v: float
    d: float
    h: float
    s: float
    kappa: float
    kappa_star: float
    delta_theta: float
    gamma_star: Optional[float] = None

    @property
    def flat(self) -> bool:
        return self.h == 0.0

    @property
    def in_validated_regime(self) -> bool:
        return VALIDATED_THETA_MIN <= self.theta < math.pi / 2


def cell_constants(theta: float) -> CellConstants:
    theta = float(theta)
    if not (0.0 < theta <= math.pi / 2):
        raise DomainError(f"theta must lie in (0, pi/2], got {theta!r}")
    c = math.cos(theta)
    if theta == math.pi / 2:
        # cos(pi/2) is 6e-17 in floating point; pin the flat case exactly
        c = 0.0
    v = math.sqrt((1.0 - c) / 2.0)
    d = math.sqrt((1.0 + c) / 2.0)
    # 1 - 2v^2 == cos(theta); use the cosine directly to avoid cancellation
    h = math.sqrt(c)
    s = math.sqrt(2.0) * v
    kappa = math.atan2(h, v)
    delta = 2.0 * math.acos(math.sqrt(c))
    if theta < VALIDATED_THETA_MIN:
        logger.warning("theta=%.6g is below the validated regime [%.1f, pi/2)", theta, VALIDATED_THETA_MIN)
    return CellConstants(theta, v, d, h, s, kappa, math.pi - 2.0 * kappa, delta)


def _norm(u: np.ndarray) -> float:
    return float(math.sqrt(float(np.dot(u, u))))


def unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = _norm(u)
    if n == 0.0:
        raise DegenerateError("cannot normalise a zero vector")
    return u / n


def angle_between(u, w) -> float:
    """Angle in [0, pi] between two non-zero vectors, via atan2(|u x w|, u.w)."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if _norm(u) == 0.0 or _norm(w) == 0.0:
        raise DegenerateError("zero-length leg in angle computation")
    return math.atan2(_norm(np.cross(u, w)), float(np.dot(u, w)))


def bond_angle(a, b, c) -> float:
    """Angle at ``b`` between the legs towards ``a`` and ``c``."""
    a, b, c = as_point(a), as_point(b), as_point(c)
    return angle_between(a - b, c - b)


def cell_normal(y1, y2, y4) -> np.ndarray:
    """Unit normal along (y2 - y1) x (y4 - y1)."""
    return unit(np.cross(np.asarray(y2) - y1, np.asarray(y4) - y1))


def cell_form(y1, y2, y3, y4, tol: float = 0.0) -> Form:
    """Form of a cell labelled counterclockwise from its lower-left corner.

    p joins the midpoints of the two diagonals; the cell is BACK when p
    points along the normal of the triangle (y1, y2, y4).
    """
    y1, y2, y3, y4 = (as_point(q) for q in (y1, y2, y3, y4))
    p = 0.5 * (y1 + y3) - 0.5 * (y2 + y4)
    n = np.cross(y2 - y1, y4 - y1)
    nn = _norm(n)
    if nn == 0.0:
        raise DegenerateError("degenerate cell: collinear corner triangle")
    pn = float(np.dot(p, n)) / nn
    if abs(pn) <= tol:
        raise DegenerateError(f"cell is planar to within {tol:g}; form undefined")
    return Form.BACK if pn > 0 else Form.SLASH


def fourth_point(y1, y2, y4, form: Form, consts: CellConstants) -> np.ndarray:
    """Complete an optimal cell opposite ``y1``.

    ``y2`` and ``y4`` are the two neighbours of ``y1`` (counterclockwise
    order y1, y2, y3, y4).  The result sits on y1 + v3*a +/- h3*n with a
    the vector to the midpoint of y2 and y4, the sign selecting the form.
    """
    y1, y2, y4 = as_point(y1), as_point(y2), as_point(y4)
    e12 = _norm(y2 - y1)
    e14 = _norm(y4 - y1)
    if e12 == 0.0 or e14 == 0.0:
        raise DegenerateError("coincident corner points")
    ang = bond_angle(y2, y1, y4)
    worst = max(abs(e12 - 1.0), abs(e14 - 1.0), abs(ang - consts.theta))
    if worst > CONSTRAINT_TOL:
        raise ConstraintError("fourth_point preconditions violated", worst)
    v, d = consts.v, consts.d
    a = 0.5 * (y2 + y4) - y1
    v3 = 2.0 * v * v / (d * d)
    h3 = 2.0 * v * consts.h / d
    if consts.flat:
        return y1 + v3 * a
    n = cell_normal(y1, y2, y4)
    sign = 1.0 if form is Form.BACK else -1.0
    return y1 + v3 * a + sign * h3 * n


def complete_cell(corners: Sequence[Optional[np.ndarray]], form: Form, consts: CellConstants) -> np.ndarray:
    """Fill the single missing corner of a cell given in lattice order.

    ``corners`` lists (lower-left, lower-right, upper-right, upper-left)
    with exactly one entry ``None``.  Both mirror candidates are built and
    the one whose form, measured in this labelling, equals ``form`` wins.
    """
    missing = [i for i, q in enumerate(corners) if q is None]
    if len(missing) != 1:
        raise DomainError("exactly one corner must be missing")
    k = missing[0]
    base = corners[(k + 2) % 4]
    nxt = corners[(k + 3) % 4]
    prv = corners[(k + 1) % 4]
    for f in (form, form.flipped()):
        cand = fourth_point(base, nxt, prv, f, consts)
        pts = [np.asarray(q) if q is not None else cand for q in corners]
        if cell_form(*pts) is form:
            return cand
    raise DegenerateError("neither mirror candidate realises the requested form")


def nonplanarity_angles(center, middles: Sequence) -> tuple[float, float]:
    c = as_point(center)
    m = [as_point(q) for q in middles]
    if len(m) != 4:
        raise DomainError("need exactly four middle points")
    return bond_angle(m[0], c, m[2]), bond_angle(m[1], c, m[3])


def delta_relation_residual(delta13: float, delta24: float, theta: float) -> float:
    return math.cos(delta13 / 2.0) * math.cos(delta24 / 2.0) - math.cos(theta)


@dataclass(frozen=True, eq=False)
class Isometry:
    """x -> rotation @ x + translation; ``rotation`` may be improper."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        resid = float(np.max(np.abs(r @ r.T - np.eye(3))))
        if resid > 1e-9:
            raise ConstraintError("rotation part is not orthogonal", resid)
        if resid > 1e-15:
            # long chains of compositions drift; snap back to O(3)
            u, _, wt = np.linalg.svd(r)
            r = u @ wt
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @property
    def proper(self) -> bool:
        return bool(np.linalg.det(self.rotation) > 0)

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts @ self.rotation.T + self.translation

    def compose(self, inner: "Isometry") -> "Isometry":
        """self after inner."""
        return Isometry(self.rotation @ inner.rotation, self.rotation @ inner.translation + self.translation)

    def inverse(self) -> "Isometry":
        rt = self.rotation.T
        return Isometry(rt, -rt @ self.translation)

    def distance(self, other: "Isometry") -> float:
        return float(max(np.max(np.abs(self.rotation - other.rotation)),
                         np.max(np.abs(self.translation - other.translation))))

    @classmethod
    def identity(cls) -> "Isometry":
        return cls()

    @classmethod
    def rotation_about(cls, axis, angle: float, point=None) -> "Isometry":
        """Right-handed rotation by ``angle`` about ``axis`` through ``point``."""
        k = unit(axis)
        kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
        r = np.eye(3) + math.sin(angle) * kx + (1.0 - math.cos(angle)) * (kx @ kx)
        p = np.zeros(3) if point is None else as_point(point)
        return cls(r, p - r @ p)

    @classmethod
    def translation_by(cls, t) -> "Isometry":
        return cls(np.eye(3), as_point(t))

    @classmethod
    def reflection_z(cls) -> "Isometry":
        return cls(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def _frame(p0, p1, p2) -> np.ndarray:
    e1 = unit(p1 - p0)
    e3 = unit(np.cross(e1, p2 - p0))
    return np.column_stack([e1, np.cross(e3, e1), e3])


def align_triples(src, dst, branch: str = "PROPER") -> Isometry:
    """Isometry taking the labelled triple ``src`` onto ``dst``.

    PROPER is the unique orientation-preserving solution; MIRROR follows it
    by the reflection across the plane of ``dst``.
    """
    src = np.array([as_point(q) for q in src])
    dst = np.array([as_point(q) for q in dst])
    if src.shape != (3, 3) or dst.shape != (3, 3):
        raise DomainError("align_triples expects two triples of 3D points")
    worst = 0.0
    for i, j in ((0, 1), (1, 2), (0, 2)):
        worst = max(worst, abs(_norm(src[i] - src[j]) - _norm(dst[i] - dst[j])))
    if worst > CONSTRAINT_TOL:
        raise ConstraintError("triples are not congruent", worst)
    for tri in (src, dst):
        if _norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) < 1e-12:
            raise DegenerateError("collinear triple")
    r = _frame(*dst) @ _frame(*src).T
    # symmetrise the translation over all three points
    t = dst.mean(axis=0) - r @ src.mean(axis=0)
    iso = Isometry(r, t)
    if branch == "PROPER":
        return iso
    if branch != "MIRROR":
        raise DomainError(f"unknown branch {branch!r}")
    n = unit(np.cross(dst[1] - dst[0], dst[2] - dst[0]))
    hmat = np.eye(3) - 2.0 * np.outer(n, n)
    c = dst.mean(axis=0)
    mirror = Isometry(hmat, c - hmat @ c)
    return mirror.compose(iso)
