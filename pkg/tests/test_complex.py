from collections import Counter
from fractions import Fraction

import pytest

from birkhoff import cellcomplex as cc
from birkhoff import curves as cv
from birkhoff import orbifold as ob
from birkhoff.errors import ConstructionFailure, GluingFailure


def complex_for(text):
    dom = ob.build_domain(ob.OrbifoldType.parse(text))
    system = cv.build_system(dom)
    return cc.assemble(system)


def kinds(cx):
    return Counter(p.kind for p in cx.pieces.values())


# (type, chi, boundary components, piece inventory)
CASES = [
    ("2;", -12, 12, {"rectangle": 12}),
    ("3;", -16, 16, {"rectangle": 16}),
    ("0;2,2,2,2,2", -5, 5, {"rectangle": 5}),
    ("0;2,2,2,2,2,2,2", -7, 7, {"rectangle": 7}),
    ("0;3,3,3,3", -4, 4, {"wing": 8}),
    ("2;3,3,3,3,3,3", -12, 12, {"wing": 12}),
    ("0;2,2,3,3,3", -5, 5, {"rectangle": 1, "wing": 4, "annulus": 2}),
    ("0;2,2,3,5,4", -5, 5, {"rectangle": 1, "wing": 4, "annulus": 2}),
    ("2;3,3,3", -12, 12, {"rectangle": 4, "wing": 4, "annulus": 2}),
    ("2;5", -12, 12, {"rectangle": 8, "annulus": 2}),
    ("3;2,3,4,5,6", -16, 16, {"rectangle": 4, "wing": 8, "annulus": 2}),
    # combinatorial-only domains assemble the same cell complex
    ("2;3,3,3,3", -12, 12, {"rectangle": 4, "wing": 4, "annulus": 2}),
]


@pytest.mark.parametrize("text,chi,b,inventory", CASES)
def test_assembled_complex(text, chi, b, inventory):
    cx = complex_for(text)
    rep = cc.genus_report(cx)
    assert rep.chi_cell_count == chi
    assert rep.chi_fractional == Fraction(chi)
    assert rep.boundary_components == b
    assert rep.genus == 1
    assert dict(kinds(cx)) == inventory
    assert set(rep.per_orbit_self_linking.values()) == {Fraction(-1)}
    assert len(rep.per_orbit_self_linking) == b


def test_rectangle_contributions_no_cone():
    cx = complex_for("2;")
    _, per_piece = cc.euler_by_accounting(cx)
    assert all(v == Fraction(-1) for v in per_piece.values())
    # each rectangle: one face, two horizontal lifts, four quarter arcs,
    # six fiber marks
    for piece in cx.pieces.values():
        assert len(piece.faces) == 1
        assert len(piece.horizontals) == 2
        assert len(piece.verticals) == 4
        assert len(set(piece.vertices)) == 6


def test_rectangle_order2_full_fiber():
    cx = complex_for("0;2,2,2,2,2")
    for piece in cx.pieces.values():
        # the doubled sweep covers the whole fiber at both cone ends
        assert len(piece.verticals) == 4
        assert len(set(piece.vertices)) == 4
    _, per_piece = cc.euler_by_accounting(cx)
    assert all(v == Fraction(-1) for v in per_piece.values())


def test_sphere_wing_is_half_hexagon():
    cx = complex_for("0;3,3,3,3")
    _, per_piece = cc.euler_by_accounting(cx)
    assert all(v == Fraction(-1, 2) for v in per_piece.values())
    for piece in cx.pieces.values():
        assert len(piece.horizontals) == 3
        assert len(piece.verticals) == 3
        assert len(piece.vertices) == 6
        assert piece.apex.startswith("m")


def test_butterfly_wing_is_octagon():
    cx = complex_for("2;3,3,3,3,3,3")
    _, per_piece = cc.euler_by_accounting(cx)
    assert all(v == Fraction(-1) for v in per_piece.values())
    for piece in cx.pieces.values():
        assert len(piece.horizontals) == 4
        assert len(piece.verticals) == 4
        assert len(piece.vertices) == 8


def test_genus_mixed_piece_constants():
    cx = complex_for("2;3,3,3")
    _, per_piece = cc.euler_by_accounting(cx)
    for name, piece in cx.pieces.items():
        expect = Fraction(-2) if piece.kind == "annulus" else Fraction(-1)
        assert per_piece[name] == expect
    ann = [p for p in cx.pieces.values() if p.kind == "annulus"]
    assert sorted(p.region for p in ann) == ["K0", "K3"]
    for p in ann:
        assert len(p.horizontals) == 6
        assert p.cone_point in ("a4", "a6")


def test_sphere_mixed_bigon_annuli():
    cx = complex_for("0;2,2,3,3,3")
    _, per_piece = cc.euler_by_accounting(cx)
    ann = [p for p in cx.pieces.values() if p.kind == "annulus"]
    assert sorted(p.region for p in ann) == ["K1", "K2"]
    for p in ann:
        assert per_piece[p.name] == Fraction(-1)
        assert len(p.horizontals) == 3
        # central order-2 cone fiber
        assert p.cone_point in ("b1", "b2")


def test_orbit_cycles_and_slk_weights():
    cx = complex_for("0;2,2,3,3,3")
    orbits = cc.boundary_orbits(cx)
    by_name = {o.name: o for o in orbits}
    # the single doubled edge curve closes through both U-turn fibers;
    # with two order-2 cones it carries both annulus contacts
    assert by_name["beta1"].lift == "+-"
    assert len(by_name["beta1"].cells) == 6
    # figure-eights: two bodies and four tips per curve, summing to -1
    slk = cc.self_linking(cx)
    assert slk["beta3"] == Fraction(-1)
    # lens orbit: two tips and one contact
    cur = cx.system.curves["beta5"]
    pts = sorted(cx.system.points[ev.point].kind for ev in cur.events)
    assert pts == ["annulusContact", "wingTip", "wingTip"]


def test_tampered_complex_reports_fiber_point():
    cx = complex_for("2;")
    piece = next(iter(cx.pieces.values()))
    dropped = piece.verticals.pop()
    with pytest.raises(GluingFailure) as err:
        cc.verify_gluing(cx)
    assert dropped[1] in str(err.value)


def test_degenerate_cases_fail_honestly():
    for text in ["0;3,3,4", "1;3,3,3,3", "1;3,4,5,6", "1;2"]:
        dom = ob.build_domain(ob.OrbifoldType.parse(text))
        with pytest.raises(ConstructionFailure) as err:
            cv.build_system(dom)
        assert "degenerate" in str(err.value)
