import math
from fractions import Fraction

import pytest

from birkhoff import hypgeo as hg
from birkhoff import orbifold as ob
from birkhoff.errors import (
    InvalidType,
    NearSingular,
    NotSmallType,
    ParseError,
    UncoveredCase,
)


def T(text):
    return ob.OrbifoldType.parse(text)


def test_parse_and_format():
    t = T("0;3,3,4")
    assert t.genus == 0 and t.orders == (3, 3, 4)
    assert str(t) == "0;3,3,4"
    assert str(T("2;")) == "2;"
    with pytest.raises(ParseError):
        T("2")
    with pytest.raises(ParseError):
        T("a;3")
    with pytest.raises(ParseError):
        T("0;3,x")


def test_euler_characteristic_exact():
    assert ob.orbifold_euler(T("2;")) == Fraction(-2)
    assert ob.orbifold_euler(T("0;3,3,4")) == Fraction(-1, 12)
    assert ob.orbifold_euler(T("0;2,2,2,2,2")) == Fraction(-1, 2)
    assert ob.orbifold_euler(T("1;2")) == Fraction(-1, 2)
    assert ob.orbifold_euler(T("0;3,3,3")) == Fraction(0)


CLASSIFICATION = [
    ("2;", ob.CaseTag.SURFACE_NO_CONE),
    ("3;", ob.CaseTag.SURFACE_NO_CONE),
    ("0;2,2,2,2,2", ob.CaseTag.SPHERE_ALL_ORDER2),
    ("0;2,2,2,2,2,2,2", ob.CaseTag.SPHERE_ALL_ORDER2),
    ("0;3,3,4", ob.CaseTag.SPHERE_ALL_BIG),
    ("0;3,3,3,3", ob.CaseTag.SPHERE_ALL_BIG),
    ("0;2,2,3,3,3", ob.CaseTag.SPHERE_MIXED),
    ("0;2,2,3,5,4", ob.CaseTag.SPHERE_MIXED),
    ("1;3,3,3,3", ob.CaseTag.GENUS_BUTTERFLY),
    ("1;3,4,5,6", ob.CaseTag.GENUS_BUTTERFLY),
    ("2;3,3,3,3,3,3", ob.CaseTag.GENUS_BUTTERFLY),
    ("1;3,3,3,3,3", ob.CaseTag.GENUS_BUTTERFLY_EXTRA),
    ("2;3,3,3", ob.CaseTag.GENUS_MIXED),
    ("2;5", ob.CaseTag.GENUS_MIXED),
    ("1;2", ob.CaseTag.GENUS_MIXED),
    ("3;2,3,4,5,6", ob.CaseTag.GENUS_MIXED),
]


@pytest.mark.parametrize("text,tag", CLASSIFICATION)
def test_classification_table(text, tag):
    assert ob.classify_type(T(text)) is tag


def test_classification_errors():
    with pytest.raises(InvalidType):
        ob.classify_type(T("1;"))  # torus, flat
    with pytest.raises(InvalidType):
        ob.classify_type(T("0;3,3,3"))  # flat
    with pytest.raises(InvalidType):
        ob.classify_type(T("0;2,2"))
    with pytest.raises(InvalidType):
        ob.classify_type(T("0;2,2,3"))  # spherical, euler +1/3
    with pytest.raises(NotSmallType):
        ob.classify_type(T("1;3,3,3,3,3,3,3,3,3"))
    with pytest.raises(UncoveredCase):
        ob.classify_type(T("0;2,3,7"))
    with pytest.raises(UncoveredCase):
        ob.classify_type(T("1;2,3,3,3"))  # order 2 with n >= 2g+2


def test_canonical_orders_mixed_sphere():
    t = T("0;3,2,5,2,4")
    assert ob.classify_type(t) is ob.CaseTag.SPHERE_MIXED
    assert ob.canonical_orders(t, ob.CaseTag.SPHERE_MIXED) == (2, 2, 3, 5, 4)


def test_domain_surface_genus2():
    dom = ob.build_domain(T("2;"))
    assert set(dom.faces) == {"A", "B", "C", "D"}
    assert all(p.n == 6 for p in dom.faces.values())
    assert len(dom.pairings) == 24  # 12 glued side pairs, both directions
    assert len(dom.vertex_classes) == 6
    for vc in dom.vertex_classes:
        assert vc.order == 1
        assert len(vc.corners) == 4
        assert vc.angle_sum == pytest.approx(2 * math.pi, abs=1e-9)
    # sides at the shared corner a_1 are interior walls
    ident = hg.Isometry.identity()
    assert dom.pairings[("A", 0)].step.almost_equal(ident, 1e-12)
    assert dom.pairings[("A", 5)].step.almost_equal(ident, 1e-12)
    assert not dom.combinatorial_only


def test_domain_sphere_all_big():
    dom = ob.build_domain(T("0;3,3,4"))
    assert set(dom.faces) == {"E", "F"}
    assert len(dom.vertex_classes) == 3
    orders = sorted(vc.order for vc in dom.vertex_classes)
    assert orders == [3, 3, 4]
    for vc in dom.vertex_classes:
        assert len(vc.corners) == 2
        assert vc.angle_sum == pytest.approx(2 * math.pi / vc.order, abs=1e-9)
    assert dom.pairings[("E", 0)].step.almost_equal(hg.Isometry.identity(), 1e-12)


def test_domain_genus1_butterfly():
    dom = ob.build_domain(T("1;3,3,3,3"))
    A = dom.faces["A"]
    assert A.n == 4
    for a in A.measured_angles:
        assert a == pytest.approx(math.pi / 6, abs=1e-9)
    assert len(dom.vertex_classes) == 4
    for vc in dom.vertex_classes:
        assert vc.order == 3
        assert vc.angle_sum == pytest.approx(2 * math.pi / 3, abs=1e-9)


def test_domain_genus_mixed_orders():
    dom = ob.build_domain(T("1;2"))
    A = dom.faces["A"]
    assert A.n == 4
    assert A.measured_angles[0] == pytest.approx(math.pi / 4, abs=1e-9)
    for a in A.measured_angles[1:]:
        assert a == pytest.approx(math.pi / 2, abs=1e-9)
    by_order = sorted(vc.order for vc in dom.vertex_classes)
    assert by_order == [1, 1, 1, 2]
    assert not dom.combinatorial_only


def test_combinatorial_only_flags():
    assert ob.build_domain(T("1;3,3,3,3,3")).combinatorial_only
    assert ob.build_domain(T("2;3,3,3,3")).combinatorial_only  # even n mixed
    assert not ob.build_domain(T("2;3,3,3")).combinatorial_only


def test_sphere_order2_domain():
    dom = ob.build_domain(T("0;2,2,2,2,2"))
    assert all(vc.order == 2 for vc in dom.vertex_classes)
    for vc in dom.vertex_classes:
        assert vc.angle_sum == pytest.approx(math.pi, abs=1e-9)
    # every equator edge carries a closed curve through order-2 points
    walls = {sp.wall_curve for sp in dom.pairings.values()}
    assert walls == {f"beta{j}" for j in range(1, 6)}


def test_vertex_star_surface():
    dom = ob.build_domain(T("2;"))
    for vc in dom.vertex_classes:
        star = ob.VertexStar(dom, vc.id)
        assert star.total == pytest.approx(2 * math.pi, abs=1e-9)
        assert len(star.corners) == 4
        assert len(star.edge_coords) == 4
        coords = sorted(star.edge_coords.values())
        # four quadrant rays: consecutive gaps of pi/2
        gaps = [b - a for a, b in zip(coords, coords[1:])]
        for gp in gaps:
            assert gp == pytest.approx(math.pi / 2, abs=1e-9)


def test_vertex_star_order2_wraps():
    dom = ob.build_domain(T("0;2,2,2,2,2"))
    star = ob.VertexStar(dom, 0)
    assert star.total == pytest.approx(math.pi, abs=1e-12)
    assert len(star.corners) == 2
    c = 0.3
    assert star.opposite(c) == pytest.approx(c + math.pi - star.total, abs=1e-12)


def test_vertex_star_cone_order3():
    dom = ob.build_domain(T("1;3,3,3,3"))
    for vc in dom.vertex_classes:
        star = ob.VertexStar(dom, vc.id)
        assert star.total == pytest.approx(2 * math.pi / 3, abs=1e-9)
        assert len(star.corners) == 4
        for c in star.corners:
            assert c.angle == pytest.approx(math.pi / 6, abs=1e-9)


def test_star_coord_of_direction():
    dom = ob.build_domain(T("2;"))
    star = ob.VertexStar(dom, dom.corner_class[("A", 1)])
    poly = dom.faces["A"]
    v = poly.vertices[1]
    lead = hg.direction_from(v, poly.vertices[2])
    c = star.corner_of_face("A", 1)
    assert star.coord_of_direction("A", 1, lead) == pytest.approx(
        c.offset % star.total, abs=1e-9
    )


def test_trace_single_crossing():
    dom = ob.build_domain(T("2;"))
    mid = dom.faces["A"].sides[1].midpoint()
    direction = hg.direction_from(0j, mid)
    length = 1.2 * hg.distance(0j, mid)
    res = ob.trace_geodesic(dom, 0j, direction, length)
    assert res.visits[0].face == "A"
    assert len(res.crossings) >= 1
    first = res.crossings[0]
    assert first.edge_class == "e2"
    assert first.face_to == "D"


def sample_on_axis(dom, axis):
    m = hg.map_to_real_axis(axis).inverse()
    for s in [x / 20.0 for x in range(-60, 61)]:
        z = m.apply(math.tanh(s / 2.0))
        face = dom.face_of_point(z, tol=-1e-6)
        if face is not None:
            return z, face
    raise AssertionError("no axis point inside a face")


def test_trace_closes_up_along_axis():
    # independent oracle: the geodesic along the axis of g_1 = r_1 r_2^{-1}
    # closes up after one translation length
    dom = ob.build_domain(T("0;3,3,4"))
    E = dom.faces["E"]
    b1, b2 = E.vertices[0], E.vertices[1]
    g1 = hg.rotation_about(b1, 2 * math.pi / 3).compose(
        hg.rotation_about(b2, 2 * math.pi / 3).inverse()
    )
    assert g1.classify() == "hyperbolic"
    axis = g1.axis()
    L = g1.translation_length()
    z, face = sample_on_axis(dom, axis)
    direction = math.atan2(axis.tangent_at(z).imag, axis.tangent_at(z).real)
    res = ob.trace_geodesic(dom, z, direction, L, start_face=face)
    end_world = hg.point_at(z, direction, L)
    end_canonical = res.visits[-1].place.inverse().apply(end_world)
    assert res.visits[-1].face == face
    assert abs(end_canonical - z) < 1e-7


def test_trace_near_vertex_raises():
    dom = ob.build_domain(T("2;"))
    v = dom.faces["A"].vertices[2]
    direction = hg.direction_from(0j, v)
    with pytest.raises(NearSingular):
        ob.trace_geodesic(dom, 0j, direction, 3.0)


def test_trace_long_geodesic_stays_consistent():
    # s-parameters along a long trace are strictly increasing and the
    # world point of each crossing lies on the traced geodesic
    dom = ob.build_domain(T("0;2,2,3,5,4"))
    res = ob.trace_geodesic(dom, 0.05 + 0.02j, 0.7, 6.0)
    ss = [c.s for c in res.crossings]
    assert all(b > a for a, b in zip(ss, ss[1:]))
    for c in res.crossings:
        assert res.geodesic.distance_to(c.point_world) < 1e-9
    assert res.visits[-1].s_out == pytest.approx(6.0)
