"""Boundary curve systems, tessellations, and marked intersection points.

Each construction case produces a system of oriented closed geodesics on
the orbifold, the decomposition of the orbifold into labeled regions cut
out by those curves, and the classified intersection points that later
become corners of the section's surface pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import hypgeo as hg
from .errors import (
    ClassificationFailure,
    ConstructionFailure,
    NearSingular,
)
from .orbifold import CaseTag, FundamentalDomain, VertexStar

# intersection-point kinds
WING_TIP = "wingTip"
BUTTERFLY_BODY = "butterflyBody"
RECTANGLE_CORNER = "rectangleCorner"
ANNULUS_CONTACT = "annulusContact"


@dataclass
class CurveArc:
    """One maximal geodesic sub-arc of a curve inside a single face."""

    face: str
    seg: hg.GeodesicSegment  # oriented along the curve


@dataclass
class FiberCircle:
    """The unit-tangent fiber over a marked point: a circle with a known
    circumference and labeled marked directions."""

    circumference: float
    dirs: dict  # label -> coordinate in [0, circumference)

    def ordered(self):
        return sorted(self.dirs.items(), key=lambda kv: kv[1])

    def successor(self, label):
        items = self.ordered()
        labels = [k for k, _ in items]
        i = labels.index(label)
        return labels[(i + 1) % len(labels)]

    def arc_labels(self, start, end):
        """Labels of consecutive marked directions swept going
        counterclockwise from start to end (inclusive)."""
        out = [start]
        cur = start
        for _ in range(len(self.dirs)):
            if cur == end:
                return out
            cur = self.successor(cur)
            out.append(cur)
        if cur == end:
            return out
        raise ClassificationFailure("fiber sweep did not reach end direction")


@dataclass
class MarkedPoint:
    """A curve intersection (or tangency structure) that becomes a corner
    of the surface pieces."""

    name: str
    kind: str
    curves: tuple  # labels of incident curves
    face: str | None = None  # face of an interior point
    z: complex | None = None  # canonical coordinates of an interior point
    vertex_class: int | None = None  # set for points at orbifold vertices
    fiber: FiberCircle | None = None


@dataclass
class Event:
    """One passage of a curve through a marked point."""

    point: str
    arc_index: int
    t: float  # fraction along the arc's segment
    dir_in: str  # marked direction along which the curve arrives
    dir_out: str  # marked direction along which it leaves


@dataclass
class OrientedCurve:
    label: str
    kind: str  # edgePair | edgeDouble | simple | figureEight | simpleLoop
    lift_kind: str  # single | doubleCover
    orbit_count: int  # boundary orbits this curve contributes
    arcs: list
    events: list = field(default_factory=list)  # ordered along the curve

    def length(self):
        return sum(a.seg.length for a in self.arcs)


@dataclass
class Region:
    name: str
    kind: str  # face | Q | K | Kp | K0 | Kn | T- | T+ | B | bigon
    cone_class: int | None = None  # vertex class of a contained cone point


class Tessellation:
    """Labeled regions plus a point classifier."""

    def __init__(self, domain, regions, classify_fn, chords_by_face):
        self.domain = domain
        self.regions = {r.name: r for r in regions}
        self._classify = classify_fn
        # chords_by_face: face -> list of (curve label, GeodesicSegment)
        # of curve arcs crossing the open face, used by the flow sampler
        self.chords_by_face = chords_by_face

    def classify(self, face, z) -> str:
        name = self._classify(face, z)
        if name not in self.regions:
            raise ClassificationFailure(f"unknown region {name}")
        return name


@dataclass
class CurveSystem:
    domain: FundamentalDomain
    curves: dict
    tessellation: Tessellation
    points: dict  # name -> MarkedPoint
    stars: dict  # vertex class id -> VertexStar

    @property
    def case(self):
        return self.domain.case


def ray_label(edge_class: str) -> str:
    return f"ray:{edge_class}"


def tan_label(curve: str, sign: int) -> str:
    return f"tan:{curve}:{'+' if sign > 0 else '-'}"


def _vertex_fiber(star: VertexStar) -> FiberCircle:
    dirs = {ray_label(cls): c % star.total for cls, c in star.edge_coords.items()}
    return FiberCircle(star.total, dirs)


def build_system(domain: FundamentalDomain) -> CurveSystem:
    builder = {
        CaseTag.SURFACE_NO_CONE: _system_surface_no_cone,
        CaseTag.SPHERE_ALL_ORDER2: _system_sphere_order2,
        CaseTag.SPHERE_ALL_BIG: _system_sphere_big,
        CaseTag.SPHERE_MIXED: _system_sphere_mixed,
        CaseTag.GENUS_BUTTERFLY: _system_genus_butterfly,
        CaseTag.GENUS_BUTTERFLY_EXTRA: _system_genus_butterfly,
        CaseTag.GENUS_MIXED: _system_genus_mixed,
    }[domain.case]
    return builder(domain)


def build_curves(domain) -> list:
    return list(build_system(domain).curves.values())


def build_tessellation(domain, system=None) -> Tessellation:
    return (system or build_system(domain)).tessellation


def classify_intersections(system: CurveSystem) -> list:
    return list(system.points.values())


def _circ_dist(a, b, total):
    d = (a - b) % total
    return min(d, total - d)


def _check_geodesic_joint(system, curve, ev: Event):
    """A curve passing a marked point on a vertex fiber must continue
    geodesically: the departure direction is the fiber-opposite of the
    arrival direction (which wraps to itself at order-2 cone points)."""
    pt = system.points[ev.point]
    if pt.fiber is None:
        return
    c_in = pt.fiber.dirs[ev.dir_in]
    c_out = pt.fiber.dirs[ev.dir_out]
    total = pt.fiber.circumference
    expect = (c_in + math.pi) % total
    if _circ_dist(expect, c_out, total) > 1e-8:
        raise ConstructionFailure(
            f"curve {curve} is not geodesic through {pt.name}: arrival "
            f"{c_in:.9f}, departure {c_out:.9f}, fiber {total:.9f}"
        )


# ----------------------------------------------------------------------
# Case: surface without cone points (genus g >= 2)
# ----------------------------------------------------------------------

def _system_surface_no_cone(domain) -> CurveSystem:
    g = domain.otype.genus
    N = 2 * g + 2
    A, C = domain.faces["A"], domain.faces["C"]

    stars = {vc.id: VertexStar(domain, vc.id) for vc in domain.vertex_classes}
    points = {}
    for j in range(1, N + 1):
        cid = domain.corner_class[("A", j - 1)]
        star = stars[cid]
        points[f"a{j}"] = MarkedPoint(
            name=f"a{j}",
            kind=RECTANGLE_CORNER,
            curves=(f"alpha{_wrap(j - 1, N)}", f"alpha{j}"),
            vertex_class=cid,
            fiber=_vertex_fiber(star),
        )

    def vertex_point_name(face, vidx):
        # the class of corner (face, vidx) equals the class of one A-corner
        cid = domain.corner_class[(face, vidx)]
        for j in range(1, N + 1):
            if domain.corner_class[("A", j - 1)] == cid:
                return f"a{j}"
        raise ConstructionFailure("vertex class without A corner")

    curves = {}
    for j in range(1, N + 1):
        i = j - 1
        a_f = CurveArc("A", A.sides[i])
        c_seg = C.sides[i]
        c_b = CurveArc("C", hg.GeodesicSegment(
            c_seg.end, c_seg.start, c_seg.carrier.reverse()
        ))
        label = f"alpha{j}"
        ev = [
            Event(f"a{j}", 0, 0.0,
                  ray_label(f"e'{j}"), ray_label(f"e{j}")),
            Event(f"a{_wrap(j + 1, N)}", 1, 0.0,
                  ray_label(f"e{j}"), ray_label(f"e'{j}")),
        ]
        curves[label] = OrientedCurve(
            label, "edgePair", "doubleCover", 2, [a_f, c_b], ev
        )

    regions = [Region(f"{f}o", "face") for f in "ABCD"]

    def classify(face, z):
        return f"{face}o"

    tess = Tessellation(domain, regions, classify, {f: [] for f in "ABCD"})
    system = CurveSystem(domain, curves, tess, points, stars)
    _verify_edge_curve_joints(system)
    return system


def _wrap(j, N):
    """1-based index wrap."""
    return (j - 1) % N + 1


def _verify_edge_curve_joints(system):
    for label, cur in system.curves.items():
        for ev in cur.events:
            _check_geodesic_joint(system, label, ev)


# ----------------------------------------------------------------------
# Case: sphere with all cone points of order 2
# ----------------------------------------------------------------------

def _system_sphere_order2(domain) -> CurveSystem:
    n = len(domain.orders)
    E = domain.faces["E"]
    stars = {vc.id: VertexStar(domain, vc.id) for vc in domain.vertex_classes}

    points = {}
    for j in range(1, n + 1):
        cid = domain.corner_class[("E", j - 1)]
        points[f"b{j}"] = MarkedPoint(
            name=f"b{j}",
            kind=RECTANGLE_CORNER,
            curves=(f"beta{_wrap(j - 1, n)}", f"beta{j}"),
            vertex_class=cid,
            fiber=_vertex_fiber(stars[cid]),
        )

    curves = {}
    for j in range(1, n + 1):
        label = f"beta{j}"
        arc = CurveArc("E", E.sides[j - 1])
        # the geodesic U-turns at both order-2 ends; one arc, two events
        ev = [
            Event(f"b{j}", 0, 0.0, ray_label(f"b{j}"), ray_label(f"b{j}")),
            Event(f"b{_wrap(j + 1, n)}", 0, 1.0,
                  ray_label(f"b{j}"), ray_label(f"b{j}")),
        ]
        curves[label] = OrientedCurve(
            label, "edgeDouble", "doubleCover", 1, [arc], ev
        )

    regions = [Region("Eo", "face"), Region("Fo", "face")]

    def classify(face, z):
        return f"{face}o"

    tess = Tessellation(domain, regions, classify, {"E": [], "F": []})
    system = CurveSystem(domain, curves, tess, points, stars)
    _verify_edge_curve_joints(system)
    return system


# ----------------------------------------------------------------------
# Generic helpers for curves obtained from hyperbolic axes
# ----------------------------------------------------------------------

@dataclass
class WallHit:
    """A wall crossing between consecutive arcs of a closed curve."""

    after_arc: int  # the curve leaves arc `after_arc` here
    edge_class: str
    point_from: complex  # canonical coords in the face of arc `after_arc`
    point_to: complex  # canonical coords in the next arc's face


def _find_on_axis(domain, axis):
    m = hg.map_to_real_axis(axis).inverse()
    for k in range(1, 200):
        for s in (k / 25.0, -k / 25.0):
            z = m.apply(math.tanh(s / 2.0))
            face = domain.face_of_point(z, tol=-1e-7)
            if face is not None:
                return z, face
    raise ConstructionFailure("found no axis point inside a face")


def _trace_closed(domain, iso, label, conjugators=()):
    """Project the axis of a hyperbolic isometry to a closed geodesic on
    the orbifold; returns per-face arcs and the wall hits between them.

    The given axis lift may miss the fundamental domain entirely; in that
    case conjugating by deck transformations moves it into view without
    changing the projected curve.
    """
    if iso.classify() != "hyperbolic":
        raise ConstructionFailure(f"isometry for {label} is not hyperbolic")
    last = None
    for h in (hg.Isometry.identity(),) + tuple(conjugators):
        cand = h.compose(iso).compose(h.inverse())
        try:
            z, face = _find_on_axis(domain, cand.axis())
        except ConstructionFailure as e:
            last = e
            continue
        iso = cand
        break
    else:
        raise ConstructionFailure(
            f"axis of {label} misses the fundamental domain"
        ) from last
    axis = iso.axis()
    L = iso.translation_length()
    t = axis.tangent_at(z)
    direction = math.atan2(t.imag, t.real)
    from .orbifold import trace_geodesic

    res = trace_geodesic(domain, z, direction, L, start_face=face)
    end_world = hg.point_at(z, direction, L)
    end_canonical = res.visits[-1].place.inverse().apply(end_world)
    if res.visits[-1].face != face or abs(end_canonical - z) > 1e-7:
        raise ConstructionFailure(f"curve {label} failed to close up")
    if not res.crossings:
        raise ConstructionFailure(f"curve {label} crosses no wall")
    # one arc per visit; the last visit merges with the first (both lie
    # in the start face, joined through the start point)
    visits, crossings = res.visits, res.crossings
    K = len(crossings)
    canon = [
        [v.place.inverse().apply(c.point_world) for c in crossings]
        for v in visits
    ]
    entry0 = canon[K][K - 1]
    arcs = [CurveArc(visits[0].face, hg.segment(entry0, canon[0][0]))]
    for k in range(1, K):
        arcs.append(CurveArc(
            visits[k].face, hg.segment(canon[k][k - 1], canon[k][k])
        ))
    hits = []
    for k in range(K):
        pt_to = canon[k + 1][k] if k < K - 1 else entry0
        hits.append(WallHit(
            after_arc=k,
            edge_class=crossings[k].edge_class,
            point_from=canon[k][k],
            point_to=pt_to,
        ))
    return arcs, hits


def _word_ball(gens, radius):
    """Products of up to `radius` generators and inverses."""
    elems = [hg.Isometry.identity()]
    frontier = [hg.Isometry.identity()]
    gens_inv = list(gens) + [g.inverse() for g in gens]
    for _ in range(radius):
        new = []
        for w in frontier:
            for g in gens_inv:
                c = w.compose(g)
                if not any(c.almost_equal(e, 1e-9) for e in elems):
                    elems.append(c)
                    new.append(c)
        frontier = new
    return elems[1:]


def _segment_direction(seg, t):
    """Euclidean tangent angle of an oriented segment at fraction t."""
    p = seg.point_at_fraction(t)
    tv = seg.carrier.tangent_at(p)
    return math.atan2(tv.imag, tv.real)


def _arc_crossings(c1: OrientedCurve, c2: OrientedCurve):
    """Transverse crossings between two curves' arcs.  For a curve with
    itself, pairs of consecutive arcs are skipped (they only share their
    wall endpoint)."""
    out = []
    m = len(c1.arcs)
    for i1, a1 in enumerate(c1.arcs):
        for i2, a2 in enumerate(c2.arcs):
            if a1.face != a2.face:
                continue
            if c1 is c2:
                if i1 >= i2 or (i2 - i1) % m in (1, m - 1):
                    continue
            x = hg.intersect(a1.seg.carrier, a2.seg.carrier)
            if x is None:
                continue
            if not (a1.seg.contains(x, tol=1e-7)
                    and a2.seg.contains(x, tol=1e-7)):
                continue
            out.append((a1.face, x, i1, i2))
    return out


def _loop_classes(domain, cur: OrientedCurve, label):
    """Vertex class cut off by each arc of a curve made of loop chords."""
    loops = []
    for k, arc in enumerate(cur.arcs):
        poly = domain.faces[arc.face]
        sc = arc.seg.carrier.signed_side(poly.center)
        cut = [
            vi for vi, v in enumerate(poly.vertices)
            if arc.seg.carrier.signed_side(v) * sc < 0
        ]
        if len(cut) != 1:
            raise ConstructionFailure(
                f"{label} arc {k} cuts off {len(cut)} vertices"
            )
        loops.append(domain.corner_class[(arc.face, cut[0])])
    return loops


def _loop_orientation(domain, cur, loops, positive_cid):
    """True when every loop arc is counterclockwise around positive_cid
    and clockwise around the other cone, False when all are reversed."""
    sign = None
    for k, arc in enumerate(cur.arcs):
        cid = loops[k]
        poly = domain.faces[arc.face]
        vidx = next(
            vi for vi in range(poly.n)
            if domain.corner_class[(arc.face, vi)] == cid
        )
        s = arc.seg.carrier.signed_side(poly.vertices[vidx])
        ok = (s > 0) == (cid == positive_cid)
        if sign is None:
            sign = ok
        elif sign != ok:
            raise ConstructionFailure("loop orientations are mixed")
    return sign


def _fraction_on_segment(seg, z):
    total = seg.length
    return hg.distance(seg.start, z) / total if total > 0 else 0.0


def _system_sphere_big(domain) -> CurveSystem:
    n = len(domain.orders)
    E = domain.faces["E"]
    rots = [
        hg.rotation_about(E.vertices[i], 2.0 * math.pi / domain.orders[i])
        for i in range(n)
    ]

    conj = _word_ball(rots, 2)
    curves = {}
    cone_class = {}
    for i in range(1, n + 1):
        g = rots[i - 1].compose(rots[i % n].inverse())
        label = f"beta{i}"
        try:
            arcs, hits = _trace_closed(domain, g, label, conj)
        except NearSingular as e:
            raise ConstructionFailure(
                f"the axis giving {label} runs into a cone point, so the "
                "curve system is degenerate: the loop geodesic passes "
                "through the cone instead of winding around it (happens "
                "for three cone points when one has order 3)"
            ) from e
        curves[label] = OrientedCurve(label, "figureEight", "single", 1, arcs)
        curves[label].wall_hits = hits
        cone_class[i] = domain.corner_class[("E", i - 1)]

    # With three cone points an order-3 cone makes the figure-eight
    # classes on either side of it conjugate in the orbifold group, so
    # their axes project to one and the same geodesic and the curve
    # system collapses.  Detect coincident traced curves up front.
    _assert_distinct_curves(curves)

    # each arc must be a loop chord cutting off exactly one cone vertex;
    # orientation: counterclockwise around b_{i+1}, clockwise around b_i
    loop_of_arc = {}
    for i in range(1, n + 1):
        label = f"beta{i}"
        cur = curves[label]
        expect = {cone_class[i]: 2, cone_class[i % n + 1]: 2}
        for attempt in range(2):
            loops = _loop_classes(domain, cur, label)
            counts = {}
            for cid in loops:
                counts[cid] = counts.get(cid, 0) + 1
            if counts != expect:
                raise ConstructionFailure(
                    f"{label} loops {counts}, expected {expect}"
                )
            sign = _loop_orientation(
                domain, cur, loops, cone_class[i % n + 1]
            )
            if sign:
                break
            _reverse_curve(cur)
        else:
            raise ConstructionFailure(f"{label} orientation did not settle")
        for k, cid in enumerate(loops):
            loop_of_arc[(label, k)] = cid

    points = {}
    # neighbor crossings c_i^{E,F}; non-neighbor curves are disjoint
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            gap = min((j - i) % n, (i - j) % n)
            if gap > 1:
                xs = _arc_crossings(curves[f"beta{i}"], curves[f"beta{j}"])
                if xs:
                    raise ConstructionFailure(
                        f"beta{i} and beta{j} intersect unexpectedly"
                    )
    for i in range(1, n + 1):
        a, b = f"beta{_wrap(i - 1, n)}", f"beta{i}"
        xs = _arc_crossings(curves[a], curves[b])
        if len(xs) != 2 or {x[0] for x in xs} != {"E", "F"}:
            raise ConstructionFailure(
                f"crossings of {a} and {b} near cone {i} malformed"
            )
        for f, z, i1, i2 in xs:
            if (loop_of_arc[(a, i1)] != cone_class[i]
                    or loop_of_arc[(b, i2)] != cone_class[i]):
                raise ConstructionFailure(
                    f"crossing of {a} and {b} is not near cone {i}"
                )
            name = f"c{i}{f}"
            points[name] = MarkedPoint(
                name=name, kind=WING_TIP, curves=(a, b), face=f, z=z
            )

    # self-intersections m_i: unique double point, on the equator; the
    # crossing is seen once in E coordinates and once in F
    for i in range(1, n + 1):
        label = f"beta{i}"
        cur = curves[label]
        groups = _group_coincident(_arc_crossings(cur, cur))
        faces = sorted(grp[0][0] for grp in groups)
        if faces != ["E", "F"]:
            raise ConstructionFailure(
                f"{label} self-intersections in faces {faces}, "
                "expected one equator double point"
            )
        f, z, i1, i2 = next(g for g in groups if g[0][0] == "E")[0]
        side_dist = min(s.carrier.distance_to(z)
                        for s in domain.faces["E"].sides)
        if side_dist > 1e-6:
            raise ConstructionFailure(
                f"double point of {label} is off the equator ({side_dist:.2e})"
            )
        points[f"m{i}"] = MarkedPoint(
            name=f"m{i}", kind=BUTTERFLY_BODY, curves=(label, label),
            face=f, z=z,
        )

    _attach_interior_events(domain, curves, points)

    regions = [Region("Eo", "face"), Region("Fo", "face")]
    for i in range(1, n + 1):
        regions.append(Region(f"B{i}", "B", cone_class[i]))
        regions.append(Region(f"T{i}-", "T-"))
        regions.append(Region(f"T{i}+", "T+"))

    chords_by_face = {"E": [], "F": []}
    for label, cur in curves.items():
        for k, arc in enumerate(cur.arcs):
            chords_by_face[arc.face].append((label, arc.seg))

    def classify(face, z):
        inside = []
        for i in range(1, n + 1):
            label = f"beta{i}"
            for k, arc in enumerate(curves[label].arcs):
                if arc.face != face:
                    continue
                cid = loop_of_arc[(label, k)]
                poly = domain.faces[face]
                vidx = next(
                    vi for vi in range(poly.n)
                    if domain.corner_class[(face, vi)] == cid
                )
                sv = arc.seg.carrier.signed_side(poly.vertices[vidx])
                sz = arc.seg.carrier.signed_side(z)
                if sv * sz > 0:
                    inside.append((i, cid))
        if not inside:
            return f"{face}o"
        cids = {c for _, c in inside}
        if len(cids) != 1:
            raise ClassificationFailure(f"point inside loops of {cids}")
        cid = cids.pop()
        js = sorted({i for i, _ in inside})
        # which cone index is this class?
        ci = next(i for i in range(1, n + 1) if cone_class[i] == cid)
        if len(js) == 2:
            return f"B{ci}"
        j = js[0]
        # inside exactly one loop: T_j^- if the loop is around b_j,
        # else T_j^+ (loop of beta_j around b_{j+1})
        if cone_class[j] == cid:
            return f"T{j}-"
        return f"T{j}+"

    tess = Tessellation(domain, regions, classify, chords_by_face)
    return CurveSystem(domain, curves, tess, points,
                       {vc.id: VertexStar(domain, vc.id)
                        for vc in domain.vertex_classes})


def _reverse_curve(cur: OrientedCurve):
    cur.arcs = [
        CurveArc(a.face, hg.GeodesicSegment(
            a.seg.end, a.seg.start, a.seg.carrier.reverse()
        ))
        for a in reversed(cur.arcs)
    ]
    if hasattr(cur, "wall_hits"):
        m = len(cur.arcs)
        for h in cur.wall_hits:
            h.after_arc = (m - 2 - h.after_arc) % m
            h.point_from, h.point_to = h.point_to, h.point_from
        cur.wall_hits = list(reversed(cur.wall_hits))


def _group_coincident(items, tol=1e-7):
    groups = []
    for it in items:
        f, z = it[0], it[1]
        for grp in groups:
            if grp[0][0] == f and abs(grp[0][1] - z) < tol:
                grp.append(it)
                break
        else:
            groups.append([it])
    return groups


def _attach_interior_events(domain, curves, points):
    """Build per-curve ordered event lists and fiber circles for marked
    points lying inside faces (crossings of curve arcs)."""
    # collect passages: (curve, arc_index, t, point name)
    passages = {label: [] for label in curves}
    for name, pt in points.items():
        if pt.z is None:
            continue
        for label in set(pt.curves):
            cur = curves[label]
            for k, arc in enumerate(cur.arcs):
                if arc.face != pt.face:
                    continue
                if arc.seg.contains(pt.z, tol=1e-7):
                    t = _fraction_on_segment(arc.seg, pt.z)
                    passages[label].append((k, t, name))
    fibers = {name: {} for name in points}
    for label, plist in passages.items():
        cur = curves[label]
        lens = [a.seg.length for a in cur.arcs]
        starts = [sum(lens[:k]) for k in range(len(lens))]
        plist.sort(key=lambda p: starts[p[0]] + p[1] * lens[p[0]])
        # merge duplicate detections of the same point at arc boundaries
        merged = []
        for k, t, name in plist:
            if merged and merged[-1][2] == name:
                prev_k, prev_t, _ = merged[-1]
                s_prev = starts[prev_k] + prev_t * lens[prev_k]
                s_cur = starts[k] + t * lens[k]
                if abs(s_cur - s_prev) < 1e-6:
                    continue
            merged.append((k, t, name))
        if (len(merged) > 1 and merged[0][2] == merged[-1][2]
                and starts[merged[0][0]] + merged[0][1] * lens[merged[0][0]]
                + sum(lens)
                - (starts[merged[-1][0]] + merged[-1][1] * lens[merged[-1][0]])
                < 1e-6):
            merged.pop()
        events = []
        for idx, (k, t, name) in enumerate(merged):
            theta = _segment_direction(curves[label].arcs[k].seg, t)
            # register fiber directions in the face of this arc
            lbl_fwd = f"tan:{label}:{idx}:+"
            lbl_bwd = f"tan:{label}:{idx}:-"
            fibers[name][lbl_fwd] = (curves[label].arcs[k].face, theta)
            fibers[name][lbl_bwd] = (
                curves[label].arcs[k].face, hg.norm_angle(theta + math.pi)
            )
            events.append(Event(name, k, t, lbl_bwd, lbl_fwd))
        cur.events = events
    for name, dirmap in fibers.items():
        pt = points[name]
        if pt.z is None or not dirmap:
            continue
        base_face = pt.face
        coords = {}
        for lbl, (f, theta) in dirmap.items():
            if f != base_face:
                raise ConstructionFailure(
                    f"marked point {name} passages span faces {f}, {base_face}"
                )
            coords[lbl] = hg.norm_angle(theta)
        pt.fiber = FiberCircle(2.0 * math.pi, coords)


def _axis_hits_cone(domain, iso, conjugators, tol=1e-6):
    """Does the axis of iso pass through a cone point in some lift?"""
    ax = iso.axis()
    base = domain.faces[domain.base_face]
    for h in (hg.Isometry.identity(),) + tuple(conjugators):
        for v in base.vertices:
            if ax.distance_to(h.apply(v)) < tol:
                return True
    return False


def _curve_signature(cur):
    return sorted(
        (a.face,
         tuple(sorted([(round(a.seg.start.real, 6),
                        round(a.seg.start.imag, 6)),
                       (round(a.seg.end.real, 6),
                        round(a.seg.end.imag, 6))])))
        for a in cur.arcs
    )


def _assert_distinct_curves(curves):
    """Coincident traced curves mean conjugate axis classes: the curve
    system collapses and the construction does not apply."""
    sigs = {lab: _curve_signature(c) for lab, c in curves.items()}
    labels = sorted(sigs)
    for ii, la in enumerate(labels):
        for lb in labels[ii + 1:]:
            if sigs[la] == sigs[lb]:
                raise ConstructionFailure(
                    f"boundary curves {la} and {lb} project to the same "
                    "geodesic: the loop classes around adjacent cone "
                    "points are conjugate (happens for three cone points "
                    "when one has order 3), so the curve system is "
                    "degenerate and this orbifold is outside the reach "
                    "of this construction"
                )


def _system_sphere_mixed(domain) -> CurveSystem:
    """Sphere with k >= 2 order-2 cones and at least one bigger cone.

    The order-2 part of the equator carries edge curves as in the
    all-order-2 case; the big cones carry figure-eight axis curves as in
    the all-big case; the two constructions are joined by two simple
    loop curves beta_k and beta_n whose lens regions K_k and K_1 hold
    the outermost order-2 cones b_k and b_1.
    """
    orders = domain.orders
    n = len(orders)
    k = sum(1 for p in orders if p == 2)
    E = domain.faces["E"]
    stars = {vc.id: VertexStar(domain, vc.id) for vc in domain.vertex_classes}
    cone_class = {
        i: domain.corner_class[("E", i - 1)] for i in range(1, n + 1)
    }

    points = {}
    for j in range(1, k + 1):
        incident = tuple(
            f"beta{i}" for i in (j - 1, j) if 1 <= i <= k - 1
        )
        points[f"b{j}"] = MarkedPoint(
            name=f"b{j}",
            kind=RECTANGLE_CORNER,
            curves=incident,
            vertex_class=cone_class[j],
            fiber=_vertex_fiber(stars[cone_class[j]]),
        )

    curves = {}
    for j in range(1, k):
        label = f"beta{j}"
        curves[label] = OrientedCurve(
            label, "edgeDouble", "doubleCover", 1,
            [CurveArc("E", E.sides[j - 1])],
        )

    rots = [
        hg.rotation_about(E.vertices[i], 2.0 * math.pi / orders[i])
        for i in range(n)
    ]
    conj = _word_ball(rots, 2)
    for i in range(k, n + 1):
        g = rots[i - 1].compose(rots[i % n].inverse())
        label = f"beta{i}"
        kind = "figureEight" if k < i < n else "simpleLoop"
        try:
            arcs, hits = _trace_closed(domain, g, label, conj)
        except (NearSingular, ConstructionFailure) as e:
            if isinstance(e, NearSingular) or _axis_hits_cone(
                domain, g, conj
            ):
                raise ConstructionFailure(
                    f"the axis giving {label} runs through a cone point, "
                    "so the curve system is degenerate and this orbifold "
                    "is outside the reach of this construction"
                ) from e
            raise
        curves[label] = OrientedCurve(label, kind, "single", 1, arcs)
        curves[label].wall_hits = hits
    _assert_distinct_curves(
        {lab: c for lab, c in curves.items() if c.kind != "edgeDouble"}
    )

    # figure-eight orientation: counterclockwise around b_{i+1} and
    # clockwise around b_i, as in the all-big case
    loop_of_arc = {}
    for i in range(k + 1, n):
        label = f"beta{i}"
        cur = curves[label]
        expect = {cone_class[i]: 2, cone_class[i + 1]: 2}
        for attempt in range(2):
            loops = _loop_classes(domain, cur, label)
            counts = {}
            for cid in loops:
                counts[cid] = counts.get(cid, 0) + 1
            if counts != expect:
                raise ConstructionFailure(
                    f"{label} loops {counts}, expected {expect}"
                )
            if _loop_orientation(domain, cur, loops, cone_class[i + 1]):
                break
            _reverse_curve(cur)
        else:
            raise ConstructionFailure(f"{label} orientation did not settle")
        for m, cid in enumerate(loops):
            loop_of_arc[(label, m)] = cid

    # lens orientation: beta_k winds positively (counterclockwise) around
    # b_k and b_{k+1}; beta_n winds negatively around b_n and b_1
    lens_classes = {}
    for i, want_ccw in ((k, True), (n, False)):
        label = f"beta{i}"
        cur = curves[label]
        expect = {cone_class[i], cone_class[i % n + 1]}
        for attempt in range(2):
            cut_ok = True
            signs = []
            for m, arc in enumerate(cur.arcs):
                poly = domain.faces[arc.face]
                sc = arc.seg.carrier.signed_side(poly.center)
                cut = [
                    vi for vi in range(poly.n)
                    if arc.seg.carrier.signed_side(poly.vertices[vi]) * sc < 0
                ]
                cids = {domain.corner_class[(arc.face, vi)] for vi in cut}
                if cids != expect:
                    cut_ok = False
                    break
                signs.extend(
                    arc.seg.carrier.signed_side(poly.vertices[vi])
                    for vi in cut
                )
            if not cut_ok:
                raise ConstructionFailure(
                    f"{label} is not a lens around cones {i}, {i % n + 1}"
                )
            if all((s > 0) == want_ccw for s in signs):
                break
            _reverse_curve(cur)
        else:
            raise ConstructionFailure(f"{label} orientation did not settle")
        lens_classes[i] = expect

    # neighbor crossings c_i^{E,F} near the big cones; the annulus contact
    # points d_k, d_n where the lens curves cross the equator edge curves;
    # all other curve pairs must be disjoint
    loop_labels = [f"beta{i}" for i in range(k, n + 1)]
    for ii, la in enumerate(loop_labels):
        for lb in loop_labels[ii + 1:]:
            i_a, i_b = int(la[4:]), int(lb[4:])
            if i_b - i_a == 1 or (i_a == k and i_b == n and k + 1 == n):
                continue
            if _arc_crossings(curves[la], curves[lb]):
                raise ConstructionFailure(
                    f"{la} and {lb} intersect unexpectedly"
                )
    for i in range(k + 1, n + 1):
        a, b = f"beta{i - 1}", f"beta{i}"
        xs = _arc_crossings(curves[a], curves[b])
        if len(xs) != 2 or {x[0] for x in xs} != {"E", "F"}:
            raise ConstructionFailure(
                f"crossings of {a} and {b} near cone {i} malformed"
            )
        for f, z, i1, i2 in xs:
            cls_a = (lens_classes[i - 1] if i - 1 in lens_classes
                     else {loop_of_arc[(a, i1)]})
            cls_b = (lens_classes[i] if i in lens_classes
                     else {loop_of_arc[(b, i2)]})
            if cone_class[i] not in cls_a or cone_class[i] not in cls_b:
                raise ConstructionFailure(
                    f"crossing of {a} and {b} is not near cone {i}"
                )
            name = f"c{i}{f}"
            points[name] = MarkedPoint(
                name=name, kind=WING_TIP, curves=(a, b), face=f, z=z
            )

    # self double points of the figure-eights
    for i in range(k + 1, n):
        label = f"beta{i}"
        cur = curves[label]
        groups = _group_coincident(_arc_crossings(cur, cur))
        faces = sorted(grp[0][0] for grp in groups)
        if faces != ["E", "F"]:
            raise ConstructionFailure(
                f"{label} self-intersections in faces {faces}, "
                "expected one equator double point"
            )
        f, z, i1, i2 = next(g for g in groups if g[0][0] == "E")[0]
        points[f"m{i}"] = MarkedPoint(
            name=f"m{i}", kind=BUTTERFLY_BODY, curves=(label, label),
            face=f, z=z,
        )

    # the lens curves cross the equator on one wall that carries an edge
    # curve: beta_k crosses beta_{k-1} in d_k, beta_n crosses beta_1 in
    # d_n; there the section's annulus piece touches the curve without a
    # half-turn of the framing
    for i, edge_j in ((k, k - 1), (n, 1)):
        label = f"beta{i}"
        hits = [h for h in curves[label].wall_hits
                if h.edge_class == f"b{edge_j}"]
        if len(hits) != 1:
            raise ConstructionFailure(
                f"{label} crosses edge b{edge_j} {len(hits)} times, "
                "expected exactly one annulus contact"
            )
        h = hits[0]
        cur = curves[label]
        # canonical coordinates on the E side of the wall
        z = (h.point_from if cur.arcs[h.after_arc].face == "E"
             else h.point_to)
        points[f"d{i}"] = MarkedPoint(
            name=f"d{i}", kind=ANNULUS_CONTACT,
            curves=(label, f"beta{edge_j}"), face="E", z=z,
        )

    _attach_interior_events(domain, curves, points)

    # splice the order-2 U-turn events into the edge curves
    for j in range(1, k):
        cur = curves[f"beta{j}"]
        first = Event(f"b{j}", 0, 0.0,
                      ray_label(f"b{j}"), ray_label(f"b{j}"))
        last = Event(f"b{j + 1}", 0, 1.0,
                     ray_label(f"b{j}"), ray_label(f"b{j}"))
        cur.events = [first] + cur.events + [last]

    expected_kinds = {}
    for j in range(1, k):
        expected_kinds[f"beta{j}"] = sorted(
            [RECTANGLE_CORNER] * 2
            + [ANNULUS_CONTACT] * sum(
                1 for i, ej in ((k, k - 1), (n, 1)) if ej == j
            )
        )
    for i in range(k, n + 1):
        if k < i < n:
            expected_kinds[f"beta{i}"] = sorted(
                [BUTTERFLY_BODY] * 2 + [WING_TIP] * 4
            )
        else:
            expected_kinds[f"beta{i}"] = sorted(
                [ANNULUS_CONTACT] + [WING_TIP] * 2
            )
    for label, cur in curves.items():
        kinds = sorted(points[ev.point].kind for ev in cur.events)
        if kinds != expected_kinds[label]:
            raise ConstructionFailure(
                f"{label} passes {kinds}, expected {expected_kinds[label]}"
            )

    regions = [Region("Eo", "face"), Region("Fo", "face"),
               Region("K1", "bigon", cone_class[1]),
               Region(f"K{k}", "bigon", cone_class[k])]
    for i in range(k + 1, n + 1):
        regions.append(Region(f"B{i}", "B", cone_class[i]))
    for i in range(k + 1, n):
        regions.append(Region(f"T{i}-", "T-"))
        regions.append(Region(f"T{i}+", "T+"))

    chords_by_face = {"E": [], "F": []}
    for label in loop_labels:
        for arc in curves[label].arcs:
            chords_by_face[arc.face].append((label, arc.seg))

    idx_of_class = {cone_class[i]: i for i in range(1, n + 1)}

    def classify(face, z):
        hits = []  # (curve index, set of cone classes cut off)
        for i in range(k, n + 1):
            label = f"beta{i}"
            for m, arc in enumerate(curves[label].arcs):
                if arc.face != face:
                    continue
                poly = domain.faces[face]
                if i in lens_classes:
                    cids = lens_classes[i]
                else:
                    cids = {loop_of_arc[(label, m)]}
                vi = next(
                    v for v in range(poly.n)
                    if domain.corner_class[(face, v)] in cids
                )
                sv = arc.seg.carrier.signed_side(poly.vertices[vi])
                if sv * arc.seg.carrier.signed_side(z) > 0:
                    hits.append((i, cids))
        if not hits:
            return f"{face}o"
        if len(hits) == 1:
            i, cids = hits[0]
            if len(cids) == 2:
                return f"K{k}" if i == k else "K1"
            cid = next(iter(cids))
            return f"T{i}-" if cid == cone_class[i] else f"T{i}+"
        if len(hits) == 2:
            (i1, c1), (i2, c2) = hits
            common = c1 & c2
            if len(common) == 1 and abs(i1 - i2) == 1:
                return f"B{idx_of_class[next(iter(common))]}"
        raise ClassificationFailure(f"point lies in loops {hits}")

    tess = Tessellation(domain, regions, classify, chords_by_face)
    system = CurveSystem(domain, curves, tess, points, stars)
    for j in range(1, k):
        label = f"beta{j}"
        for ev in curves[label].events:
            _check_geodesic_joint(system, label, ev)
    return system


def _system_genus_butterfly(domain) -> CurveSystem:
    """Genus >= 1 with cone points of order >= 3 at every polygon vertex.

    Each boundary curve is a closed geodesic made of two chord arcs: a
    common perpendicular between two sides of the base polygon and its
    mirror image in the glued neighbor face.  The chords run close to a
    polygon side, pushed off the cone points sitting at its endpoints.
    """
    g = domain.otype.genus
    N = 2 * g + 2
    A = domain.faces["A"]
    p1 = domain.orders[0]
    s_h = hg.reflection_across(A.sides[0].carrier)
    s_v = hg.reflection_across(A.sides[N - 1].carrier)
    rot = hg.rotation_about(A.vertices[0], -math.pi / p1)

    def side(j):
        return A.sides[(j - 1) % N]

    # chord j: perpendicular feet on sides j-1 and j+1, crossing the band
    # near side j; oriented from side j-1 to j+1 for odd j, reversed for
    # even j so that neighboring curves run head-to-head
    chordA = {}
    for j in range(1, N + 1):
        seg = hg.common_perpendicular(
            side(j - 1).carrier, side(j + 1).carrier
        )
        if not (side(j - 1).contains(seg.start, tol=1e-9)
                and side(j + 1).contains(seg.end, tol=1e-9)):
            raise ConstructionFailure(
                f"chord {j} has a foot outside its polygon side"
            )
        if j % 2 == 0:
            seg = hg.segment(seg.end, seg.start)
        chordA[j] = seg

    # the chords must be pairwise distinct geodesics; for a quadrilateral
    # base polygon chords j and j+2 run between the same pair of sides, and
    # the common perpendicular between two geodesics is unique, so those
    # chords coincide and the curves collapse onto each other in pairs
    for j in range(1, N + 1):
        for k in range(j + 1, N + 1):
            c1, c2 = chordA[j].carrier, chordA[k].carrier
            if {round(c1.theta1, 9), round(c1.theta2, 9)} == {
                round(c2.theta1, 9), round(c2.theta2, 9)
            }:
                raise ConstructionFailure(
                    f"chords {j} and {k} coincide, so the boundary curves "
                    "collapse in pairs: the curve system is degenerate and "
                    "this orbifold is outside the reach of this construction"
                )

    def mirrored(m, seg):
        # continuation arc in the glued face, oriented along the curve
        return hg.segment(m.apply(seg.end), m.apply(seg.start))

    curves = {}
    chords_by_face = {"A": [], "B": [], "C": [], "D": []}
    for j in range(1, N + 1):
        odd = j % 2 == 1
        e = chordA[j]
        m, partner = (s_v, "D") if odd else (s_h, "B")
        label = f"alpha{j}"
        curves[label] = OrientedCurve(
            label, "simple", "single", 1,
            [CurveArc("A", e), CurveArc(partner, mirrored(m, e))],
        )
        ep = hg.segment(rot.apply(e.start), rot.apply(e.end))
        mp, partnerp = (s_h, "B") if odd else (s_v, "D")
        labelp = f"alpha'{j}"
        curves[labelp] = OrientedCurve(
            labelp, "simple", "single", 1,
            [CurveArc("C", ep), CurveArc(partnerp, mirrored(mp, e))],
        )
        chords_by_face["A"].append((label, e))
        chords_by_face["C"].append((labelp, ep))
        chords_by_face[partner].append((label, curves[label].arcs[1].seg))
        chords_by_face[partnerp].append((labelp, curves[labelp].arcs[1].seg))

    _verify_closed_two_arc_curves(domain, curves)

    # owner of the image chord of e_j in faces B and D
    def chord_owner(face, j):
        odd = j % 2 == 1
        if face == "A":
            return f"alpha{j}"
        if face == "C":
            return f"alpha'{j}"
        if face == "D":
            return f"alpha{j}" if odd else f"alpha'{j}"
        return f"alpha{j}" if not odd else f"alpha'{j}"

    # crossings: cyclically neighboring chords cross once per face; the
    # crossing of chords j and j+1 in the base face (and its rotated
    # image) is a butterfly body when j is odd, all others are wing tips
    points = {}
    crossA = {}
    for j in range(1, N + 1):
        jn = j % N + 1
        x = hg.intersect(chordA[j].carrier, chordA[jn].carrier)
        if x is None or not (chordA[j].contains(x, tol=1e-9)
                             and chordA[jn].contains(x, tol=1e-9)):
            raise ConstructionFailure(
                f"chords {j} and {jn} do not cross inside the polygon"
            )
        crossA[j] = x
        body = j % 2 == 1
        points[f"s{j}"] = MarkedPoint(
            name=f"s{j}",
            kind=BUTTERFLY_BODY if body else WING_TIP,
            curves=(f"alpha{j}", f"alpha{jn}"),
            face="A", z=x,
        )
        points[f"s'{j}"] = MarkedPoint(
            name=f"s'{j}",
            kind=BUTTERFLY_BODY if body else WING_TIP,
            curves=(f"alpha'{j}", f"alpha'{jn}"),
            face="C", z=rot.apply(x),
        )
        points[f"sd{j}"] = MarkedPoint(
            name=f"sd{j}", kind=WING_TIP,
            curves=(chord_owner("D", j), chord_owner("D", jn)),
            face="D", z=s_v.apply(x),
        )
        points[f"sb{j}"] = MarkedPoint(
            name=f"sb{j}", kind=WING_TIP,
            curves=(chord_owner("B", j), chord_owner("B", jn)),
            face="B", z=s_h.apply(x),
        )
    for j in range(1, N + 1):
        for k in range(j + 1, N + 1):
            gap = min((k - j) % N, (j - k) % N)
            if gap > 1 and hg.intersect(
                chordA[j].carrier, chordA[k].carrier
            ) is not None:
                x = hg.intersect(chordA[j].carrier, chordA[k].carrier)
                if (chordA[j].contains(x, tol=1e-9)
                        and chordA[k].contains(x, tol=1e-9)):
                    raise ConstructionFailure(
                        f"non-neighboring chords {j} and {k} cross"
                    )

    _attach_interior_events(domain, curves, points)
    for label, cur in curves.items():
        kinds = sorted(points[ev.point].kind for ev in cur.events)
        if kinds != [BUTTERFLY_BODY] + [WING_TIP] * 3:
            raise ConstructionFailure(
                f"{label} passes {kinds}, expected one body and three tips"
            )

    regions = [Region(f"{f}o", "face") for f in "ABCD"]
    for j in range(1, N + 1):
        regions.append(
            Region(f"Q{j}", "Q", domain.corner_class[("A", j - 1)])
        )
        regions.append(Region(f"K{j}", "K"))
        regions.append(Region(f"K'{j}", "Kp"))

    # outward side of each chord (toward the polygon side it runs along),
    # stored per face for the image chords
    outward = {}
    face_maps = {"A": None, "B": s_h, "C": rot, "D": s_v}
    image_chords = {f: {} for f in "ABCD"}
    for f, m in face_maps.items():
        for j in range(1, N + 1):
            e = chordA[j]
            if m is None:
                img, ref = e, side(j).midpoint()
            else:
                img = hg.segment(m.apply(e.start), m.apply(e.end))
                ref = m.apply(side(j).midpoint())
            image_chords[f][j] = img
            outward[(f, j)] = img.carrier.signed_side(ref)

    def k_name(face, j):
        # the band beyond chord j continues across wall e_j into the face
        # glued there (B for odd j, D for even); the primed band K'_j sits
        # across wall e'_j
        odd = j % 2 == 1
        if face == "A":
            return f"K{j}"
        if face == "C":
            return f"K'{j}"
        if face == "D":
            return f"K{j}" if not odd else f"K'{j}"
        return f"K{j}" if odd else f"K'{j}"

    def classify(face, z):
        beyond = [
            j for j in range(1, N + 1)
            if image_chords[face][j].carrier.signed_side(z)
            * outward[(face, j)] > 0
        ]
        if not beyond:
            return f"{face}o"
        if len(beyond) == 1:
            return k_name(face, beyond[0])
        if len(beyond) == 2:
            a, b = beyond
            if a % N + 1 == b:
                return f"Q{b}"
            if b % N + 1 == a:
                return f"Q{a}"
        raise ClassificationFailure(
            f"point lies beyond chords {beyond}"
        )

    tess = Tessellation(domain, regions, classify, chords_by_face)
    return CurveSystem(domain, curves, tess, points,
                       {vc.id: VertexStar(domain, vc.id)
                        for vc in domain.vertex_classes})


def _verify_closed_two_arc_curves(domain, curves):
    """Independent check: retrace each two-arc curve with the developing
    tracer and require it to close up through the expected faces."""
    from .orbifold import trace_geodesic

    for label, cur in curves.items():
        first = cur.arcs[0]
        z = first.seg.midpoint()
        tv = first.seg.carrier.tangent_at(z)
        direction = math.atan2(tv.imag, tv.real)
        L = cur.length()
        res = trace_geodesic(domain, z, direction, L, start_face=first.face)
        end_world = hg.point_at(z, direction, L)
        end_canonical = res.visits[-1].place.inverse().apply(end_world)
        if res.visits[-1].face != first.face or abs(end_canonical - z) > 1e-7:
            raise ConstructionFailure(f"curve {label} does not close up")
        faces = [v.face for v in res.visits]
        expect = [a.face for a in cur.arcs]
        if faces[:-1] != expect:
            raise ConstructionFailure(
                f"curve {label} visits {faces[:-1]}, expected {expect}"
            )


def _system_genus_mixed(domain) -> CurveSystem:
    """Genus >= 1 with cone points on some, but not all, polygon vertices.

    The cone-bearing part of the polygon carries chord curves as in the
    all-cones case (chords 0..n, one more than the number of cones); the
    free sides carry edge-pair curves as in the cone-free case, except
    for the last side, whose curve would be redundant.  The two seam
    chords run off into annulus regions K0 and Kn around the two regular
    vertices a_{2g+2} and a_{n+1} that separate the two parts.
    """
    g = domain.otype.genus
    N = 2 * g + 2
    A, C = domain.faces["A"], domain.faces["C"]
    orders = domain.orders
    n = len(orders)
    if n % 2 == 0:
        # the domain placed the last cone in a face interior
        n -= 1
    if n + 1 >= N:
        raise ConstructionFailure(
            "no free polygon side remains: the two annulus regions would "
            "collapse onto the same vertex, so the curve system is "
            "degenerate and this orbifold is outside the reach of this "
            "construction"
        )
    p1 = orders[0]
    s_h = hg.reflection_across(A.sides[0].carrier)
    s_v = hg.reflection_across(A.sides[N - 1].carrier)
    rot = hg.rotation_about(A.vertices[0], -math.pi / p1)

    def side(j):
        return A.sides[(j - 1) % N]

    # chords 0..n flank the cone vertices a_1..a_n; chord j runs near
    # side j with perpendicular feet on sides j-1 and j+1, oriented from
    # side j-1 to j+1 for odd j and reversed for even j
    chordA = {}
    for j in range(0, n + 1):
        seg = hg.common_perpendicular(
            side(j - 1).carrier, side(j + 1).carrier
        )
        if not (side(j - 1).contains(seg.start, tol=1e-9)
                and side(j + 1).contains(seg.end, tol=1e-9)):
            raise ConstructionFailure(
                f"chord {j} has a foot outside its polygon side"
            )
        if j % 2 == 0:
            seg = hg.segment(seg.end, seg.start)
        chordA[j] = seg
    # on a quadrilateral base the perpendicular between two opposite
    # sides with right-angled ends is the far polygon side itself: the
    # chord then lies on a wall instead of cutting off a band
    side_thetas = [
        {round(s.carrier.theta1, 9), round(s.carrier.theta2, 9)}
        for s in A.sides
    ]
    for j, seg in chordA.items():
        th = {round(seg.carrier.theta1, 9), round(seg.carrier.theta2, 9)}
        if th in side_thetas:
            raise ConstructionFailure(
                f"chord {j} collapses onto a polygon side, so the curve "
                "system is degenerate and this orbifold is outside the "
                "reach of this construction"
            )
    for j in range(0, n + 1):
        for k in range(j + 1, n + 1):
            c1, c2 = chordA[j].carrier, chordA[k].carrier
            if {round(c1.theta1, 9), round(c1.theta2, 9)} == {
                round(c2.theta1, 9), round(c2.theta2, 9)
            }:
                raise ConstructionFailure(
                    f"chords {j} and {k} coincide, so the boundary curves "
                    "collapse in pairs: the curve system is degenerate and "
                    "this orbifold is outside the reach of this construction"
                )

    def mirrored(m, seg):
        return hg.segment(m.apply(seg.end), m.apply(seg.start))

    curves = {}
    chords_by_face = {"A": [], "B": [], "C": [], "D": []}
    for j in range(0, n + 1):
        odd = j % 2 == 1
        e = chordA[j]
        m, partner = (s_v, "D") if odd else (s_h, "B")
        label = f"alpha{j}"
        curves[label] = OrientedCurve(
            label, "simple", "single", 1,
            [CurveArc("A", e), CurveArc(partner, mirrored(m, e))],
        )
        ep = hg.segment(rot.apply(e.start), rot.apply(e.end))
        mp, partnerp = (s_h, "B") if odd else (s_v, "D")
        labelp = f"alpha'{j}"
        curves[labelp] = OrientedCurve(
            labelp, "simple", "single", 1,
            [CurveArc("C", ep), CurveArc(partnerp, mirrored(mp, e))],
        )
        chords_by_face["A"].append((label, e))
        chords_by_face["C"].append((labelp, ep))
        chords_by_face[partner].append((label, curves[label].arcs[1].seg))
        chords_by_face[partnerp].append((labelp, curves[labelp].arcs[1].seg))

    _verify_closed_two_arc_curves(domain, curves)

    # edge-pair curves on the free sides n+1 .. 2g+1
    stars = {vc.id: VertexStar(domain, vc.id) for vc in domain.vertex_classes}
    for j in range(n + 1, N):
        i = j - 1
        a_f = CurveArc("A", A.sides[i])
        c_seg = C.sides[i]
        c_b = CurveArc("C", hg.GeodesicSegment(
            c_seg.end, c_seg.start, c_seg.carrier.reverse()
        ))
        label = f"alpha{j}"
        curves[label] = OrientedCurve(
            label, "edgePair", "doubleCover", 2, [a_f, c_b]
        )

    points = {}
    for i in range(n + 1, N + 1):
        cid = domain.corner_class[("A", i - 1)]
        incident = tuple(
            f"alpha{j}" for j in (i - 1, i) if n + 1 <= j <= N - 1
        )
        points[f"a{i}"] = MarkedPoint(
            name=f"a{i}",
            kind=RECTANGLE_CORNER,
            curves=incident,
            vertex_class=cid,
            fiber=_vertex_fiber(stars[cid]),
        )

    def chord_owner(face, j):
        odd = j % 2 == 1
        if face == "A":
            return f"alpha{j}"
        if face == "C":
            return f"alpha'{j}"
        if face == "D":
            return f"alpha{j}" if odd else f"alpha'{j}"
        return f"alpha{j}" if not odd else f"alpha'{j}"

    # neighboring chords cross once per face; the crossings of chords j
    # and j+1 in A and C are butterfly bodies when j is odd, tips else
    crossA = {}
    for j in range(0, n):
        jn = j + 1
        x = hg.intersect(chordA[j].carrier, chordA[jn].carrier)
        if x is None or not (chordA[j].contains(x, tol=1e-9)
                             and chordA[jn].contains(x, tol=1e-9)):
            raise ConstructionFailure(
                f"chords {j} and {jn} do not cross inside the polygon"
            )
        crossA[j] = x
        body = j % 2 == 1
        points[f"s{j}"] = MarkedPoint(
            name=f"s{j}",
            kind=BUTTERFLY_BODY if body else WING_TIP,
            curves=(f"alpha{j}", f"alpha{jn}"),
            face="A", z=x,
        )
        points[f"s'{j}"] = MarkedPoint(
            name=f"s'{j}",
            kind=BUTTERFLY_BODY if body else WING_TIP,
            curves=(f"alpha'{j}", f"alpha'{jn}"),
            face="C", z=rot.apply(x),
        )
        points[f"sd{j}"] = MarkedPoint(
            name=f"sd{j}", kind=WING_TIP,
            curves=(chord_owner("D", j), chord_owner("D", jn)),
            face="D", z=s_v.apply(x),
        )
        points[f"sb{j}"] = MarkedPoint(
            name=f"sb{j}", kind=WING_TIP,
            curves=(chord_owner("B", j), chord_owner("B", jn)),
            face="B", z=s_h.apply(x),
        )
    for j in range(0, n + 1):
        for k in range(j + 2, n + 1):
            x = hg.intersect(chordA[j].carrier, chordA[k].carrier)
            if x is not None and (chordA[j].contains(x, tol=1e-9)
                                  and chordA[k].contains(x, tol=1e-9)):
                raise ConstructionFailure(
                    f"non-neighboring chords {j} and {k} cross"
                )

    # the seam chords end perpendicularly on the free sides 2g+1 and n+1
    # where the edge-pair curves run; there the annulus pieces over K0
    # and Kn touch the curves without a half-turn of the framing
    d0 = chordA[0].end
    dn = chordA[n].end
    points["d0"] = MarkedPoint(
        name="d0", kind=ANNULUS_CONTACT,
        curves=("alpha0", f"alpha{N - 1}"), face="A", z=d0,
    )
    points["d'0"] = MarkedPoint(
        name="d'0", kind=ANNULUS_CONTACT,
        curves=("alpha'0", f"alpha{N - 1}"), face="C", z=rot.apply(d0),
    )
    points[f"d{n}"] = MarkedPoint(
        name=f"d{n}", kind=ANNULUS_CONTACT,
        curves=(f"alpha{n}", f"alpha{n + 1}"), face="A", z=dn,
    )
    points[f"d'{n}"] = MarkedPoint(
        name=f"d'{n}", kind=ANNULUS_CONTACT,
        curves=(f"alpha'{n}", f"alpha{n + 1}"), face="C", z=rot.apply(dn),
    )

    _attach_interior_events(domain, curves, points)

    # splice the vertex passages into the edge-pair curves
    for j in range(n + 1, N):
        cur = curves[f"alpha{j}"]
        first = Event(f"a{j}", 0, 0.0,
                      ray_label(f"e'{j}"), ray_label(f"e{j}"))
        last = Event(f"a{j + 1}", 1, 0.0,
                     ray_label(f"e{j}"), ray_label(f"e'{j}"))
        cur.events = sorted(
            cur.events + [first, last], key=lambda ev: (ev.arc_index, ev.t)
        )

    expected_kinds = {}
    for j in range(0, n + 1):
        for label in (f"alpha{j}", f"alpha'{j}"):
            if j in (0, n):
                expected_kinds[label] = sorted(
                    [ANNULUS_CONTACT] + [WING_TIP] * 2
                )
            else:
                expected_kinds[label] = sorted(
                    [BUTTERFLY_BODY] + [WING_TIP] * 3
                )
    for j in range(n + 1, N):
        expected_kinds[f"alpha{j}"] = sorted(
            [RECTANGLE_CORNER] * 2
            + [ANNULUS_CONTACT] * (2 if j in (n + 1, N - 1) else 0)
        )
    for label, cur in curves.items():
        kinds = sorted(points[ev.point].kind for ev in cur.events)
        if kinds != expected_kinds[label]:
            raise ConstructionFailure(
                f"{label} passes {kinds}, expected {expected_kinds[label]}"
            )

    regions = [Region(f"{f}o", "face") for f in "ABCD"]
    for j in range(1, n + 1):
        regions.append(
            Region(f"Q{j}", "Q", domain.corner_class[("A", j - 1)])
        )
    regions.append(Region("K0", "K0", domain.corner_class[("A", N - 1)]))
    regions.append(Region(f"K{n}", "Kn", domain.corner_class[("A", n)]))
    for j in range(1, n):
        regions.append(Region(f"K{j}", "K"))
        regions.append(Region(f"K'{j}", "Kp"))

    outward = {}
    face_maps = {"A": None, "B": s_h, "C": rot, "D": s_v}
    image_chords = {f: {} for f in "ABCD"}
    for f, m in face_maps.items():
        for j in range(0, n + 1):
            e = chordA[j]
            if m is None:
                img, ref = e, side(j).midpoint()
            else:
                img = hg.segment(m.apply(e.start), m.apply(e.end))
                ref = m.apply(side(j).midpoint())
            image_chords[f][j] = img
            outward[(f, j)] = img.carrier.signed_side(ref)

    def k_name(face, j):
        # K0 and Kn wrap around the regular vertices a_{2g+2} and
        # a_{n+1}, collecting the bands of all four faces; the other
        # bands pair up across walls as in the all-cones case
        if j in (0, n):
            return f"K{j}"
        odd = j % 2 == 1
        if face == "A":
            return f"K{j}"
        if face == "C":
            return f"K'{j}"
        if face == "D":
            return f"K{j}" if not odd else f"K'{j}"
        return f"K{j}" if odd else f"K'{j}"

    def classify(face, z):
        beyond = [
            j for j in range(0, n + 1)
            if image_chords[face][j].carrier.signed_side(z)
            * outward[(face, j)] > 0
        ]
        if not beyond:
            return f"{face}o"
        if len(beyond) == 1:
            return k_name(face, beyond[0])
        if len(beyond) == 2 and beyond[0] + 1 == beyond[1]:
            return f"Q{beyond[1]}"
        raise ClassificationFailure(
            f"point lies beyond chords {beyond}"
        )

    tess = Tessellation(domain, regions, classify, chords_by_face)
    system = CurveSystem(domain, curves, tess, points, stars)
    for j in range(n + 1, N):
        for ev in curves[f"alpha{j}"].events:
            _check_geodesic_joint(system, f"alpha{j}", ev)
    return system
