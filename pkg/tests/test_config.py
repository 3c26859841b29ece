import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_almost_equal

from nftiles.cli import incidence_summary
from nftiles.config import (
    Deformation,
    Family,
    SectionSymbol,
    TypePattern,
    classify_gamma,
    form_function,
    incidence_angles,
    pattern_from_section,
    pattern_from_types,
    realize,
    section_turning,
    validate_pattern,
    verify_admissible,
)
from nftiles.errors import DomainError, NftError
from nftiles.geom_core import Form, cell_constants
from nftiles.tiles import FAMILY_A, FAMILY_B, with_gamma_star

C140 = with_gamma_star(cell_constants(1.40))


def _types(sec, family=Family.FAMILY_A):
    return set(pattern_from_section(list(sec), family).sigma.values())


@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("sec", ["FFFF", "UUUUUU", "DDDDDD", "FUFDF", "FDUUUFDDF"])
def test_section_patterns_valid_and_realisable(sec, family):
    p = pattern_from_section(list(sec), family)
    assert validate_pattern(p).valid
    allowed = set(FAMILY_A if family is Family.FAMILY_A else FAMILY_B)
    assert set(p.sigma.values()) <= allowed
    rep = verify_admissible(realize(p, C140), C140)
    assert rep.ok
    assert rep.worst < 1e-9


@pytest.mark.parametrize("family", list(Family))
def test_flat_and_rolled_incidence(family):
    g = C140.gamma_star
    roll, still = ("gamma2", "gamma1") if family is Family.FAMILY_A else ("gamma1", "gamma2")
    flat = incidence_summary(realize(pattern_from_section(list("FFFF"), family), C140), g)
    assert flat[roll + "_max_abs"] < 1e-9
    assert flat[still + "_max_abs"] < 1e-9
    for sec, sign in (("UUUUUU", "-1"), ("DDDDDD", "+1")):
        s = incidence_summary(realize(pattern_from_section(list(sec), family), C140), g)
        assert s[roll + "_classes"][sign] == s["bonds"]
        assert s[still + "_max_abs"] < 1e-9


def test_wrinkled_sections_use_types():
    # both flat types and the four transition types
    assert len(_types("FUFDF")) == 4
    zs = {t for t in FAMILY_A if t.code in ("[/\\ / \\/ ; s-1]", "[\\/ / /\\ ; s+1]")}
    assert zs <= _types("FUFDF")
    # nine steps is the shortest section with all eight
    assert _types("FDUUUFDDF") == set(FAMILY_A)
    # family B reads the section from the other end
    assert _types("FUUDDDFUF", Family.FAMILY_B) == set(FAMILY_B)


def test_rolled_section_turns_uniformly():
    for sec in ("DDDDDDDDDDDD", "UUUUUUUUUUUU"):
        y = realize(pattern_from_section(list(sec)), C140)
        turns = section_turning(y, (11, -1), 12)
        assert max(turns) - min(turns) < 1e-9
        assert min(turns) > 0.1
    y = realize(pattern_from_section(list("FFFFFFFFFFFF")), C140)
    assert max(section_turning(y, (11, -1), 12)) < 1e-7


def test_random_sections_property():
    rng = random.Random(7)
    g = C140.gamma_star
    for _ in range(15):
        sec = [rng.choice("FUD") for _ in range(rng.randint(1, 10))]
        y = realize(pattern_from_section(sec), C140)
        assert verify_admissible(y, C140).worst < 1e-9
        inc = incidence_angles(y)
        assert max(abs(v) for v in inc.gamma1.values()) < 1e-9
        assert all(classify_gamma(v, g, 1e-9) is not None for v in inc.gamma2.values())
        assert incidence_summary(y, g)["gamma2_drift_along_d1"] < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.lists(st.sampled_from("FUD"), min_size=1, max_size=12),
       st.sampled_from([1.25, 1.40, 1.55]))
def test_section_round_trip(sec, theta):
    c = cell_constants(theta)
    p = pattern_from_section(sec)
    assert validate_pattern(p).valid
    assert verify_admissible(realize(p, c), c).ok


def test_form_function_constant_along_d1():
    y = realize(pattern_from_section(list("FUUUFDDDF")), C140)
    tau = form_function(y)
    checked = 0
    for (s, t), f in tau.items():
        nb = tau.get((s + 1, t + 1))
        if nb is not None:
            assert nb == f
            checked += 1
    assert checked > 20
    assert set(tau.values()) <= set(Form)


def test_validate_reports_violations():
    z_plus, z_minus = (t for t in FAMILY_A if t.code in ("[\\/ / /\\ ; s+1]", "[/\\ / \\/ ; s-1]"))
    # d1-constancy broken
    sigma = {(0, 0): z_plus, (2, 0): z_plus, (0, 2): z_plus, (2, 2): z_minus}
    rep = validate_pattern(TypePattern((2, 2), sigma))
    assert not rep.valid
    assert "d1-constancy" in {v.rule for v in rep.violations}
    # family mixing
    other = next(t for t in FAMILY_B if t not in FAMILY_A)
    sigma = {(0, 0): other}
    rep = validate_pattern(TypePattern((1, 1), sigma))
    assert [v.rule for v in rep.violations] == ["family"]
    # vertical matching: flat types of opposite sign stacked
    rep = validate_pattern(TypePattern((1, 2), {(0, 0): z_plus, (0, 2): z_minus}))
    assert {v.rule for v in rep.violations} & {"M1", "M2"}


def test_family_b_violation_names():
    p = pattern_from_section(list("FUUUF"), Family.FAMILY_B)
    sigma = dict(p.sigma)
    k = next(iter(sigma))
    sigma[k] = next(t for t in FAMILY_A if t not in FAMILY_B)
    rep = validate_pattern(TypePattern(p.shape, sigma, Family.FAMILY_B))
    assert any(v.rule == "family" and v.sites == (k,) for v in rep.violations)


def test_pattern_window_errors():
    with pytest.raises(DomainError):
        pattern_from_section([])
    with pytest.raises(DomainError):
        SectionSymbol.parse("X")
    with pytest.raises(DomainError):
        pattern_from_types([FAMILY_A[0]] * 2, shape=(3, 3))
    with pytest.raises(DomainError):
        TypePattern((2, 2), {(0, 0): FAMILY_A[0]})


def test_realize_extents_clip():
    p = pattern_from_section(list("FUFDF"))
    y = realize(p, C140, extents=(0, 3, 0, 3))
    assert y.domain == frozenset((i, j) for i in range(4) for j in range(4))
    with pytest.raises(DomainError):
        realize(p, C140, extents=(0, 40, 0, 3))


def test_realize_rejects_inconsistent_pattern():
    z_plus, z_minus = (t for t in FAMILY_A if t.code in ("[\\/ / /\\ ; s+1]", "[/\\ / \\/ ; s-1]"))
    p = TypePattern((1, 2), {(0, 0): z_plus, (0, 2): z_minus})
    with pytest.raises(NftError):
        realize(p, C140)


def test_verify_admissible_detects_perturbation():
    y = realize(pattern_from_section(list("FUUF")), C140)
    pts = dict(y.points)
    k = sorted(pts)[len(pts) // 2]
    pts[k] = pts[k] + np.array([0.0, 0.0, 1e-6])
    rep = verify_admissible(Deformation(pts, y.theta), C140)
    assert not rep.ok
    assert rep.worst > 1e-7


def test_family_rotation_consistent():
    pa = pattern_from_section(list("FUUUFDDF"))
    pb = pa.rotated()
    assert pb.family is Family.FAMILY_B
    assert validate_pattern(pb).valid
    back = pb.rotated().rotated().rotated()
    assert back.family is Family.FAMILY_A
    assert dict(back.sigma) == dict(pa.sigma)


def test_realisation_is_rigid_copy_of_reference_lengths():
    y = realize(pattern_from_section(list("FDDF")), C140)
    d = [np.linalg.norm(y[(i + 1, j)] - y[(i, j)]) for (i, j) in y.points if (i + 1, j) in y.points]
    assert_array_almost_equal(d, np.ones(len(d)), decimal=12)
    assert math.isclose(classify_gamma(C140.gamma_star, C140.gamma_star), 1)
