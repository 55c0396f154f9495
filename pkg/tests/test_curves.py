import math

import pytest

from birkhoff import curves as cv
from birkhoff import hypgeo as hg
from birkhoff import orbifold as ob
from birkhoff.errors import ConstructionFailure


def system_for(text):
    return cv.build_system(ob.build_domain(ob.OrbifoldType.parse(text)))


# ---------------------------------------------------------------- no cones


def test_surface_curve_count_and_kinds():
    s = system_for("2;")
    assert len(s.curves) == 6
    for c in s.curves.values():
        assert c.kind == "edgePair"
        assert c.lift_kind == "doubleCover"
        assert c.orbit_count == 2
        assert len(c.arcs) == 2


def test_surface_curves_close_up_geodesically():
    s = system_for("2;")
    for label, c in s.curves.items():
        assert len(c.events) == 2
        for ev in c.events:
            cv._check_geodesic_joint(s, label, ev)


def test_surface_points_are_rectangle_corners():
    s = system_for("3;")
    assert set(s.points) == {f"a{j}" for j in range(1, 9)}
    for pt in s.points.values():
        assert pt.kind == cv.RECTANGLE_CORNER
        assert pt.fiber.circumference == pytest.approx(2 * math.pi, abs=1e-9)
        assert len(pt.fiber.dirs) == 4


def test_surface_curve_length_oracle():
    # both arcs of a curve lie over the same closed geodesic, whose length
    # is twice the polygon side length
    s = system_for("2;")
    dom = s.domain
    side = dom.faces["A"].sides[1].length
    for c in s.curves.values():
        assert c.length() == pytest.approx(2 * side, abs=1e-9)


def test_surface_regions():
    s = system_for("2;")
    assert set(s.tessellation.regions) == {"Ao", "Bo", "Co", "Do"}
    for f in "ABCD":
        z = s.domain.faces[f].center
        assert s.tessellation.classify(f, z) == f"{f}o"


# ---------------------------------------------------------- all order two


def test_order2_curve_count_and_kinds():
    s = system_for("0;2,2,2,2,2")
    assert len(s.curves) == 5
    for c in s.curves.values():
        assert c.kind == "edgeDouble"
        assert c.lift_kind == "doubleCover"
        assert c.orbit_count == 1
        assert len(c.arcs) == 1


def test_order2_points_have_half_turn_fibers():
    s = system_for("0;2,2,2,2,2")
    assert set(s.points) == {f"b{j}" for j in range(1, 6)}
    for pt in s.points.values():
        assert pt.fiber.circumference == pytest.approx(math.pi, abs=1e-9)


def test_order2_curve_is_polygon_side():
    s = system_for("0;2,2,2,2,2")
    dom = s.domain
    for j in range(1, 6):
        c = s.curves[f"beta{j}"]
        side = dom.faces["E"].sides[j - 1]
        assert c.length() == pytest.approx(side.length, abs=1e-9)
        for ev in c.events:
            cv._check_geodesic_joint(s, f"beta{j}", ev)


def test_order2_regions():
    s = system_for("0;2,2,2,2,2")
    assert set(s.tessellation.regions) == {"Eo", "Fo"}


# ------------------------------------------------------ sphere, orders >= 3


@pytest.mark.parametrize("text", ["0;4,4,4", "0;3,3,3,3", "0;3,4,5,6,7"])
def test_sphere_big_counts(text):
    s = system_for(text)
    n = len(s.domain.orders)
    assert len(s.curves) == n
    assert len(s.points) == 3 * n
    assert len(s.tessellation.regions) == 3 * n + 2
    for c in s.curves.values():
        assert c.kind == "figureEight"
        assert c.lift_kind == "single"
        assert c.orbit_count == 1
        assert len(c.arcs) == 4


def test_sphere_big_curve_length_matches_axis_oracle():
    # the traced curve length must equal the translation length computed
    # from the trace of the underlying hyperbolic isometry
    s = system_for("0;3,3,3,3")
    dom = s.domain
    E = dom.faces["E"]
    for i in range(1, 5):
        r_i = hg.rotation_about(E.vertices[i - 1], 2 * math.pi / 3)
        r_n = hg.rotation_about(E.vertices[i % 4], 2 * math.pi / 3)
        g = r_i.compose(r_n.inverse())
        L = 2.0 * math.acosh(abs(g.trace()) / 2.0)
        assert s.curves[f"beta{i}"].length() == pytest.approx(L, abs=1e-8)


def test_sphere_big_marked_point_pattern():
    s = system_for("0;3,3,3,3")
    n = 4
    tips = [p for p in s.points.values() if p.kind == cv.WING_TIP]
    bodies = [p for p in s.points.values() if p.kind == cv.BUTTERFLY_BODY]
    assert len(tips) == 2 * n
    assert len(bodies) == n
    # each double point lies on the equator (a side of E)
    for pt in bodies:
        d = min(sd.carrier.distance_to(pt.z)
                for sd in s.domain.faces["E"].sides)
        assert d < 1e-6
    # every curve passes 4 wing tips and its double point twice, in order
    for label, c in s.curves.items():
        kinds = sorted(s.points[e.point].kind for e in c.events)
        assert kinds == [cv.BUTTERFLY_BODY] * 2 + [cv.WING_TIP] * 4
        keys = [(e.arc_index, e.t) for e in c.events]
        assert keys == sorted(keys)


def test_sphere_big_region_classifier_covers_all():
    import random

    rng = random.Random(7)
    s = system_for("0;4,4,4")
    seen = set()
    for face in ("E", "F"):
        poly = s.domain.faces[face]
        for _ in range(8000):
            z = complex(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9))
            if poly.contains(z, tol=-1e-6):
                seen.add(s.tessellation.classify(face, z))
    assert seen == set(s.tessellation.regions)


@pytest.mark.parametrize("text", ["0;3,3,4", "0;3,3,5", "0;3,4,4"])
def test_sphere_big_three_cones_with_order3_degenerates(text):
    # with three cone points, an order-3 cone makes the two figure-eight
    # classes through it conjugate (insert the relator, then reduce the
    # squared order-3 generator), so their axes project to one geodesic
    with pytest.raises(ConstructionFailure, match="degenerate"):
        system_for(text)


def test_sphere_big_conjugacy_collapse_is_real():
    # independent oracle for the degeneracy: exhibit an explicit deck
    # conjugator between the first two loop-pair isometries of (0;3,3,4)
    dom = ob.build_domain(ob.OrbifoldType.parse("0;3,3,4"))
    E = dom.faces["E"]
    rots = [hg.rotation_about(E.vertices[i], 2 * math.pi / dom.orders[i])
            for i in range(3)]
    # the rotation product relation that generates the collapse
    prod = rots[0].compose(rots[1]).compose(rots[2])
    assert prod.almost_equal(hg.Isometry.identity(), 1e-9)
    g1 = rots[0].compose(rots[1].inverse())
    g2 = rots[1].compose(rots[2].inverse())
    ball = cv._word_ball(rots, 3)
    assert any(
        h.compose(g1).compose(h.inverse()).almost_equal(g2, 1e-9)
        for h in ball
    )

# ------------------------------------------------- genus >= 1, orders >= 3


@pytest.mark.parametrize("text,g", [("2;3,3,3,3,3,3", 2), ("3;3,3,3,3,3,3,3,3", 3)])
def test_butterfly_counts(text, g):
    s = system_for(text)
    assert len(s.curves) == 4 * g + 4
    assert len(s.points) == 8 * g + 8
    assert len(s.tessellation.regions) == 6 * g + 10
    for c in s.curves.values():
        assert c.kind == "simple"
        assert c.lift_kind == "single"
        assert c.orbit_count == 1
        assert len(c.arcs) == 2


def test_butterfly_chords_meet_sides_perpendicularly():
    # each base-face arc is a common perpendicular: both feet make a right
    # angle with the polygon side they land on
    s = system_for("2;3,3,3,3,3,3")
    A = s.domain.faces["A"]
    for j in range(1, 7):
        arc = s.curves[f"alpha{j}"].arcs[0]
        for foot in (arc.seg.start, arc.seg.end):
            side = min(A.sides, key=lambda sd: sd.carrier.distance_to(foot))
            assert side.carrier.distance_to(foot) < 1e-9
            ang = hg.angle_at(arc.seg.carrier, side.carrier, foot)
            assert min(ang, math.pi - ang) == pytest.approx(
                math.pi / 2, abs=1e-9
            )


def test_butterfly_curve_length_is_twice_chord():
    s = system_for("2;3,3,3,3,3,3")
    for c in s.curves.values():
        a, b = c.arcs
        assert a.seg.length == pytest.approx(b.seg.length, abs=1e-9)
        assert c.length() == pytest.approx(2 * a.seg.length, abs=1e-9)


def test_butterfly_marked_point_pattern():
    s = system_for("2;3,3,3,3,3,3")
    tips = [p for p in s.points.values() if p.kind == cv.WING_TIP]
    bodies = [p for p in s.points.values() if p.kind == cv.BUTTERFLY_BODY]
    assert len(bodies) == 6  # one per odd chord pair in each of two faces
    assert len(tips) == len(s.points) - 6
    for label, c in s.curves.items():
        kinds = sorted(s.points[e.point].kind for e in c.events)
        assert kinds == [cv.BUTTERFLY_BODY] + [cv.WING_TIP] * 3
        keys = [(e.arc_index, e.t) for e in c.events]
        assert keys == sorted(keys)


def test_butterfly_region_classifier_covers_all():
    import random

    rng = random.Random(11)
    s = system_for("2;3,3,3,3,3,3")
    seen = set()
    for face in "ABCD":
        poly = s.domain.faces[face]
        lo = min(min(v.real, v.imag) for v in poly.vertices)
        hi = max(max(v.real, v.imag) for v in poly.vertices)
        for _ in range(20000):
            z = complex(rng.uniform(lo, hi), rng.uniform(lo, hi))
            if poly.contains(z, tol=-1e-6):
                seen.add(s.tessellation.classify(face, z))
    assert seen == set(s.tessellation.regions)


def test_butterfly_cone_corner_regions():
    # the region beyond chords j-1 and j contains the cone vertex a_j
    s = system_for("2;3,3,3,3,3,3")
    A = s.domain.faces["A"]
    for j in range(1, 7):
        v = A.vertices[j - 1]
        z = 0.98 * v + 0.02 * A.center  # nudge inside
        assert s.tessellation.classify("A", z) == f"Q{j}"


@pytest.mark.parametrize("text", ["1;3,3,3,3", "1;3,4,5,6", "1;3,3,3,3,3"])
def test_butterfly_genus1_degenerates(text):
    # on a quadrilateral the two chords between opposite side pairs are the
    # same common perpendicular, so the curves collapse in pairs
    with pytest.raises(ConstructionFailure, match="degenerate"):
        system_for(text)


def test_butterfly_extra_cones_is_combinatorial_only():
    s = system_for("2;3,4,5,6,7,3,3")
    assert s.domain.combinatorial_only
    assert len(s.curves) == 12
    assert len(s.points) == 24


# ------------------------------------------- sphere, mixed orders (2 and >2)


@pytest.mark.parametrize("text", ["0;2,2,3,3,3", "0;2,2,3,5,4"])
def test_mixed_sphere_counts(text):
    s = system_for(text)
    kinds = sorted(c.kind for c in s.curves.values())
    assert kinds == ["edgeDouble", "figureEight", "figureEight",
                     "simpleLoop", "simpleLoop"]
    assert len(s.points) == 12
    assert set(s.tessellation.regions) == {
        "Eo", "Fo", "K1", "K2", "B3", "B4", "B5",
        "T3-", "T3+", "T4-", "T4+",
    }
    lifts = {c.kind: c.lift_kind for c in s.curves.values()}
    assert lifts["edgeDouble"] == "doubleCover"
    assert lifts["figureEight"] == "single"
    assert lifts["simpleLoop"] == "single"


def test_mixed_sphere_curve_lengths_match_oracles():
    s = system_for("0;2,2,3,5,4")
    dom = s.domain
    E = dom.faces["E"]
    assert s.curves["beta1"].length() == pytest.approx(
        E.sides[0].length, abs=1e-9
    )
    for i in range(2, 6):
        r_i = hg.rotation_about(E.vertices[i - 1],
                                2 * math.pi / dom.orders[i - 1])
        r_n = hg.rotation_about(E.vertices[i % 5],
                                2 * math.pi / dom.orders[i % 5])
        g = r_i.compose(r_n.inverse())
        L = 2.0 * math.acosh(abs(g.trace()) / 2.0)
        assert s.curves[f"beta{i}"].length() == pytest.approx(L, abs=1e-8)


def test_mixed_sphere_event_pattern():
    s = system_for("0;2,2,3,3,3")
    expect = {
        "beta1": [cv.ANNULUS_CONTACT] * 2 + [cv.RECTANGLE_CORNER] * 2,
        "beta2": [cv.ANNULUS_CONTACT] + [cv.WING_TIP] * 2,
        "beta3": [cv.BUTTERFLY_BODY] * 2 + [cv.WING_TIP] * 4,
        "beta4": [cv.BUTTERFLY_BODY] * 2 + [cv.WING_TIP] * 4,
        "beta5": [cv.ANNULUS_CONTACT] + [cv.WING_TIP] * 2,
    }
    for label, want in expect.items():
        kinds = sorted(s.points[e.point].kind for e in s.curves[label].events)
        assert kinds == sorted(want)


def test_mixed_sphere_contact_points_on_equator():
    # the lens curves cross the edge curves exactly on the equator
    s = system_for("0;2,2,3,3,3")
    E = s.domain.faces["E"]
    for name in ("d2", "d5"):
        pt = s.points[name]
        assert pt.kind == cv.ANNULUS_CONTACT
        assert E.sides[0].contains(pt.z, tol=1e-7)


def test_mixed_sphere_region_classifier_covers_all():
    import random

    rng = random.Random(3)
    s = system_for("0;2,2,3,3,3")
    seen = set()
    for face in ("E", "F"):
        poly = s.domain.faces[face]
        lo = min(min(v.real, v.imag) for v in poly.vertices)
        hi = max(max(v.real, v.imag) for v in poly.vertices)
        for _ in range(20000):
            z = complex(rng.uniform(lo, hi), rng.uniform(lo, hi))
            if poly.contains(z, tol=-1e-6):
                seen.add(s.tessellation.classify(face, z))
    assert seen == set(s.tessellation.regions)


def test_mixed_sphere_without_figure_eights():
    # k = n - 1: the two lens curves meet each other directly
    s = system_for("0;2,2,2,2,3")
    assert set(s.tessellation.regions) == {"Eo", "Fo", "K1", "K4", "B5"}
    kinds = sorted(c.kind for c in s.curves.values())
    assert kinds == ["edgeDouble"] * 3 + ["simpleLoop"] * 2


def test_mixed_sphere_axis_through_cone_degenerates():
    with pytest.raises(ConstructionFailure, match="degenerate"):
        system_for("0;2,2,2,3")

# --------------------------------------------- genus with some free sides


@pytest.mark.parametrize("text,g,n", [("2;3,3,3", 2, 3), ("3;2,3,4,5,6", 3, 5)])
def test_mixed_genus_counts(text, g, n):
    s = system_for(text)
    chords = [c for c in s.curves.values() if c.kind == "simple"]
    edges = [c for c in s.curves.values() if c.kind == "edgePair"]
    assert len(chords) == 2 * n + 2
    assert len(edges) == 2 * g + 1 - n
    assert sum(c.orbit_count for c in s.curves.values()) == 4 * g + 4
    assert len(s.points) == 4 * n + (2 * g + 2 - n) + 4
    assert len(s.tessellation.regions) == 3 * n + 4
    for c in chords:
        assert c.lift_kind == "single" and len(c.arcs) == 2
    for c in edges:
        assert c.lift_kind == "doubleCover" and c.orbit_count == 2


def test_mixed_genus_chords_meet_sides_perpendicularly():
    s = system_for("2;3,3,3")
    A = s.domain.faces["A"]
    for j in range(0, 4):
        arc = s.curves[f"alpha{j}"].arcs[0]
        for foot in (arc.seg.start, arc.seg.end):
            side = min(A.sides, key=lambda sd: sd.carrier.distance_to(foot))
            assert side.carrier.distance_to(foot) < 1e-9
            ang = hg.angle_at(arc.seg.carrier, side.carrier, foot)
            assert min(ang, math.pi - ang) == pytest.approx(
                math.pi / 2, abs=1e-9
            )


def test_mixed_genus_curve_lengths():
    # chord curves are twice the distance between their two foot sides;
    # edge-pair curves are twice the polygon side they run along
    s = system_for("2;3,3,3")
    A = s.domain.faces["A"]
    for j in range(0, 4):
        c = s.curves[f"alpha{j}"]
        lo = A.sides[(j - 2) % 6].carrier
        hi = A.sides[j % 6].carrier
        oracle = hg.common_perpendicular(lo, hi).length
        assert c.length() == pytest.approx(2 * oracle, abs=1e-9)
        assert s.curves[f"alpha'{j}"].length() == pytest.approx(
            2 * oracle, abs=1e-9
        )
    for j in (4, 5):
        c = s.curves[f"alpha{j}"]
        assert c.length() == pytest.approx(
            2 * A.sides[j - 1].length, abs=1e-9
        )


def test_mixed_genus_event_pattern():
    s = system_for("3;2,3,4,5,6")
    n = 5
    for j in range(0, n + 1):
        for label in (f"alpha{j}", f"alpha'{j}"):
            kinds = sorted(s.points[e.point].kind for e in s.curves[label].events)
            if j in (0, n):
                assert kinds == [cv.ANNULUS_CONTACT] + [cv.WING_TIP] * 2
            else:
                assert kinds == [cv.BUTTERFLY_BODY] + [cv.WING_TIP] * 3
    for j in (6, 7):
        c = s.curves[f"alpha{j}"]
        kinds = sorted(s.points[e.point].kind for e in c.events)
        assert kinds == [cv.ANNULUS_CONTACT] * 2 + [cv.RECTANGLE_CORNER] * 2
        keys = [(e.arc_index, e.t) for e in c.events]
        assert keys == sorted(keys)


def test_mixed_genus_contact_points_on_free_sides():
    # the seam chords end on the first and last free sides, where the
    # edge-pair curves run
    s = system_for("2;3,3,3")
    A, C = s.domain.faces["A"], s.domain.faces["C"]
    assert A.sides[4].contains(s.points["d0"].z, tol=1e-9)
    assert A.sides[3].contains(s.points["d3"].z, tol=1e-9)
    assert C.sides[4].contains(s.points["d'0"].z, tol=1e-9)
    assert C.sides[3].contains(s.points["d'3"].z, tol=1e-9)
    assert s.points["d0"].curves == ("alpha0", "alpha5")
    assert s.points["d3"].curves == ("alpha3", "alpha4")


def test_mixed_genus_region_classifier_covers_all():
    import random

    rng = random.Random(13)
    s = system_for("2;3,3,3")
    seen = set()
    for face in "ABCD":
        poly = s.domain.faces[face]
        lo = min(min(v.real, v.imag) for v in poly.vertices)
        hi = max(max(v.real, v.imag) for v in poly.vertices)
        for _ in range(20000):
            z = complex(rng.uniform(lo, hi), rng.uniform(lo, hi))
            if poly.contains(z, tol=-1e-6):
                seen.add(s.tessellation.classify(face, z))
    assert seen == set(s.tessellation.regions)


def test_mixed_genus_corner_regions():
    # cone vertices sit in Q regions; the two regular vertices flanking
    # the free sides sit in the annulus regions K0 and Kn
    s = system_for("2;3,3,3")
    A = s.domain.faces["A"]
    for j, name in [(1, "Q1"), (2, "Q2"), (3, "Q3"), (4, "K3"), (6, "K0")]:
        v = A.vertices[j - 1]
        z = 0.98 * v + 0.02 * A.center
        assert s.tessellation.classify("A", z) == name


def test_mixed_genus_single_cone_has_no_butterflies():
    s = system_for("2;5")
    assert not any(
        p.kind == cv.BUTTERFLY_BODY for p in s.points.values()
    )
    assert set(s.tessellation.regions) == {
        "Ao", "Bo", "Co", "Do", "Q1", "K0", "K1"
    }


@pytest.mark.parametrize("text", ["1;2", "1;5"])
def test_mixed_genus_quadrilateral_degenerates(text):
    # on a quadrilateral the perpendicular between two opposite sides is
    # the far polygon side itself: the seam chords fall onto the walls
    with pytest.raises(ConstructionFailure, match="degenerate"):
        system_for(text)


def test_mixed_genus_even_cone_count_is_combinatorial_only():
    s = system_for("2;3,3,3,3")
    assert s.domain.combinatorial_only
    ref = system_for("2;3,3,3")
    assert set(s.curves) == set(ref.curves)
    assert set(s.tessellation.regions) == set(ref.tessellation.regions)
