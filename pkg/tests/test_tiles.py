import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nftiles.errors import DegenerateError, DomainError
from nftiles.geom_core import bond_angle, cell_constants
from nftiles.tiles import (
    FAMILY_A,
    FAMILY_B,
    ORIENTATION_TABLE,
    ORIENTATION_THETA_MIN,
    TABLE_CLASSES,
    TABLE_SIDES,
    ZDI_TYPES,
    BoundaryKind,
    Orientation,
    TileClass,
    TileType,
    all_types,
    boundary_kind,
    boundary_orientation,
    boundary_signature,
    classify,
    gamma_star,
    measure_type,
    orbit,
    reference_tile,
    reflect_type,
    rotate_type,
    tt,
    with_gamma_star,
)

types = st.sampled_from(all_types())


def test_thirty_two_types_and_codes_round_trip():
    ts = all_types()
    assert len(ts) == len(set(ts)) == 32
    for t in ts:
        assert TileType.parse(t.code) == t
    with pytest.raises(DomainError):
        TileType.parse("[// / /x ; s+1]")
    with pytest.raises(DomainError):
        TileType(tt("////", 1).forms, 0)


def test_partition_matches_transcribed_classes():
    orbits = {orbit(t) for t in all_types()}
    assert len(orbits) == 6
    for cls, members in TABLE_CLASSES.items():
        assert frozenset(members) in orbits
        assert all(classify(t) is cls for t in members)
    sizes = sorted(len(o) for o in orbits)
    assert sizes == [2, 2, 4, 8, 8, 8]


@given(types)
def test_symmetry_actions(t):
    assert rotate_type(rotate_type(t, "CW"), "CCW") == t
    r = t
    for _ in range(4):
        r = rotate_type(r, "CW")
    assert r == t
    assert reflect_type(reflect_type(t)) == t
    assert classify(rotate_type(t)) is classify(t) is classify(reflect_type(t))


def test_families_are_quarter_turns_of_each_other():
    assert {rotate_type(t, "CW") for t in FAMILY_A} == set(FAMILY_B)
    assert set(FAMILY_A) | set(FAMILY_B) == set(ZDI_TYPES)
    assert {classify(t) for t in ZDI_TYPES} == {TileClass.Z, TileClass.D, TileClass.I}


@pytest.mark.parametrize("theta", [1.1, 1.25, 1.40, 1.55])
def test_reference_tiles_are_admissible(theta):
    c = cell_constants(theta)
    for t in all_types():
        tile = reference_tile(t, c)
        pts = tile.points()
        assert measure_type(pts) == t
        for off in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            assert abs(np.linalg.norm(pts[off]) - 1) < 1e-12
        for (a, b) in itertools.combinations(((1, 0), (0, 1), (-1, 0), (0, -1)), 2):
            ang = bond_angle(pts[a], pts[(0, 0)], pts[b])
            want = c.delta_theta if a[0] + b[0] == 0 and a[1] + b[1] == 0 else theta
            assert abs(ang - want) < 1e-10


def test_boundary_angles_at_140():
    c = cell_constants(1.40)
    margins = []
    for t in all_types():
        tile = reference_tile(t, c)
        for side in TABLE_SIDES:
            ang = bond_angle(*tile.boundary_triple(side))
            if boundary_kind(t, side) is BoundaryKind.Eb:
                margins.append(c.delta_theta - ang)
            else:
                assert abs(ang - c.delta_theta) < 1e-10
    assert min(margins) > 1.0


@pytest.mark.parametrize("theta", [1.25, 1.40, 1.55])
def test_orientation_table_matches_geometry(theta):
    c = cell_constants(theta)
    for t, orients, _ in ORIENTATION_TABLE:
        tile = reference_tile(t, c)
        for side, want in zip(TABLE_SIDES, orients):
            assert boundary_orientation(t, side) is want
            assert boundary_signature(tile, side).orientation is want


def test_orientation_crossover_at_cos_one_third():
    d_plus = tt("////", 1)
    side = [s for s in TABLE_SIDES if boundary_kind(d_plus, s) is BoundaryKind.Db][0]
    want = boundary_orientation(d_plus, side)
    above = reference_tile(d_plus, cell_constants(ORIENTATION_THETA_MIN + 1e-6))
    below = reference_tile(d_plus, cell_constants(ORIENTATION_THETA_MIN - 1e-6))
    assert boundary_signature(above, side).orientation is want
    assert boundary_signature(below, side).orientation is not want
    with pytest.raises(DegenerateError):
        boundary_signature(reference_tile(d_plus, cell_constants(ORIENTATION_THETA_MIN)), side, tol=1e-9)


def test_e_boundary_orientation_needs_geometry():
    e = TABLE_CLASSES[TileClass.E][0]
    with pytest.raises(DomainError):
        boundary_orientation(e, TABLE_SIDES[0])


def test_gamma_star_decreases_to_zero():
    vals = [gamma_star(cell_constants(th)) for th in (1.0, 1.2, 1.4, 1.5, 1.57)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # square-root approach to the flat limit
    assert gamma_star(cell_constants(math.pi / 2 - 1e-6)) < 0.01
    c = with_gamma_star(cell_constants(1.4))
    assert c.gamma_star == gamma_star(c)
    with pytest.raises(DegenerateError):
        gamma_star(cell_constants(math.pi / 2))
