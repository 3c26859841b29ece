import math

import numpy as np
import pytest

from nftiles.attach import (
    Direction,
    Reason,
    attach,
    attach_verdict,
    check_case_tables,
    characterized_admissible,
    gap_iv_excess,
    geometric_verdict,
    middle_tile_type,
    pairwise_table,
    place,
    predicted_verdict,
    relative_pose,
    square_arrangement_verdict,
)
from nftiles.errors import AttachError, DomainError
from nftiles.geom_core import Isometry, cell_constants, nonplanarity_angles
from nftiles.tiles import (
    FAMILY_A,
    FAMILY_B,
    ZDI_TYPES,
    BoundaryKind,
    Side,
    all_types,
    boundary_kind,
    rotate_type,
    table_order_key,
    tt,
)

C140 = cell_constants(1.40)


def test_table_order_and_shape():
    rows = pairwise_table(C140)
    assert len(rows) == 14 * 14 * 2
    keys = [(table_order_key(r.left_type), table_order_key(r.right_type), r.direction) for r in rows]
    assert keys == sorted(keys)
    assert rows == pairwise_table(C140)


def test_geometry_agrees_with_orientation_rule():
    for r in pairwise_table(C140):
        pred = predicted_verdict(r.left_type, r.right_type, r.direction)
        geo = geometric_verdict(r.left_type, r.right_type, r.direction, C140)
        # the rejection reason may differ; attachability and the middle may not
        assert (pred.ok, pred.middle_type) == (geo.ok, geo.middle_type), (r.left_type, r.right_type, r.direction)


def test_e_boundaries_are_angle_mismatches():
    for a in all_types():
        for b in all_types():
            if BoundaryKind.Eb in (boundary_kind(a, Side.RIGHT), boundary_kind(b, Side.LEFT)):
                assert predicted_verdict(a, b, "E1").reason is Reason.ANGLE_MISMATCH


def test_quarter_turn_symmetry():
    # the clockwise quarter turn sends +e1 to -e2: the right tile ends up below
    for a in ZDI_TYPES:
        for b in ZDI_TYPES:
            v = predicted_verdict(a, b, "E1")
            w = predicted_verdict(rotate_type(b), rotate_type(a), "E2")
            assert v.ok == w.ok
            if v.ok:
                assert w.middle_type == rotate_type(v.middle_type)


def test_middle_tile_type_errors():
    with pytest.raises(DomainError):
        middle_tile_type(ZDI_TYPES[0], ZDI_TYPES[0], "E3")
    z_minus, z_plus = tt("/\\\\/", -1), tt("\\//\\", 1)
    with pytest.raises(AttachError) as exc:
        middle_tile_type(z_minus, z_plus)
    assert exc.value.reason == "ORIENTATION_MISMATCH"


def test_attached_middle_is_coplanar():
    base = place(tt("/\\\\/", -1), C140)
    new = attach(base, tt("////", 1), Direction.PLUS_E1)
    pts = {**base.lattice_points(), **new.lattice_points()}
    mids = [pts[(1 + dx, dy)] for dx, dy in ((1, 0), (0, 1), (-1, 0), (0, -1))]
    d13, d24 = nonplanarity_angles(pts[(1, 0)], mids)
    assert abs(d13 - C140.delta_theta) < 1e-9 and abs(d24 - C140.delta_theta) < 1e-9


def _family(t):
    return "A" if t in FAMILY_A and t not in FAMILY_B else "B"


def test_closed_form_poses():
    shift = Isometry.translation_by([2 * C140.s, 0, 0])
    axes = {"A": (1, 1, 0), "B": (-1, 1, 0)}
    seen = set()
    for t in ZDI_TYPES:
        for u in ZDI_TYPES:
            if not predicted_verdict(t, u, "E1").ok:
                continue
            kinds = (boundary_kind(t, Side.RIGHT), boundary_kind(u, Side.LEFT))
            if kinds == (BoundaryKind.Zb, BoundaryKind.Zb):
                want = shift
            elif kinds == (BoundaryKind.Db, BoundaryKind.Zb):
                want = Isometry.rotation_about(axes[_family(t)], -2 * t.sigma * C140.kappa).compose(shift)
            elif kinds == (BoundaryKind.Zb, BoundaryKind.Db):
                want = shift.compose(Isometry.rotation_about(axes[_family(u)], -2 * u.sigma * C140.kappa))
            else:
                continue
            seen.add(kinds)
            assert relative_pose(t, u, Direction.PLUS_E1, C140).distance(want) < 1e-10
    assert len(seen) == 3


@pytest.mark.parametrize("consts", [None, C140, cell_constants(1.25), cell_constants(1.55)])
def test_case_tables(consts):
    checks = check_case_tables(consts)
    assert len(checks) == 18
    assert all(c.ok for c in checks), [c for c in checks if not c.ok]


def test_square_verdicts_agree_with_characterisation_on_family_samples():
    z_minus, d_plus = tt("/\\\\/", -1), tt("////", 1)
    flat = (z_minus,) * 4
    assert characterized_admissible(flat)
    assert square_arrangement_verdict(flat, C140).admissible
    mixed = (z_minus, d_plus, z_minus, d_plus)  # B != D
    assert not characterized_admissible(mixed)
    assert not square_arrangement_verdict(mixed, C140).admissible


@pytest.mark.parametrize("theta", [0.5, 1.0, 1.25, 1.40, 1.55])
def test_gap_iv_closed_form(theta):
    c = cell_constants(theta)
    excess, closed = gap_iv_excess(c)
    assert abs(excess - closed) < 1e-10
    assert excess > 0
    # the closed form is |(I - R_{-4 kappa})(v, 0, h)|^2 = 4 d^2 sin^2(2 kappa)
    assert abs(closed - 4 * c.d ** 2 * math.sin(2 * c.kappa) ** 2) < 1e-12
