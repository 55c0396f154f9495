"""Orbifold types, case classification, fundamental domains, and tracing.

An orbifold type is a genus plus a list of cone orders.  Hyperbolic types
are sorted into construction cases; each case realizes a fundamental
domain made of explicitly placed polygon faces with side pairings, and
geodesics are traced by developing the domain across those pairings.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import hypgeo as hg
from . import polygon as pg
from .errors import (
    ConstructionFailure,
    InvalidType,
    NearSingular,
    NotSmallType,
    ParseError,
    UncoveredCase,
)
from .tolerances import EPS_CONE


class CaseTag(enum.Enum):
    """Construction case for a hyperbolic orbifold type."""

    SURFACE_NO_CONE = "surface-no-cone"
    SPHERE_ALL_ORDER2 = "sphere-all-order2"
    SPHERE_ALL_BIG = "sphere-all-big"
    SPHERE_MIXED = "sphere-mixed"
    GENUS_BUTTERFLY = "genus-butterfly"
    GENUS_BUTTERFLY_EXTRA = "genus-butterfly-extra"
    GENUS_MIXED = "genus-mixed"


@dataclass(frozen=True)
class OrbifoldType:
    """Genus plus cone-point orders."""

    genus: int
    orders: tuple

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(int(p) for p in self.orders))
        if self.genus < 0:
            raise InvalidType("genus must be nonnegative")
        if any(p < 2 for p in self.orders):
            raise InvalidType("cone orders must be at least 2")

    @staticmethod
    def parse(text: str) -> "OrbifoldType":
        """Parse strings like '2;' or '0;3,3,4'."""
        parts = text.strip().split(";")
        if len(parts) != 2:
            raise ParseError(f"expected '<genus>;<orders>': {text!r}")
        try:
            genus = int(parts[0])
        except ValueError as e:
            raise ParseError(f"bad genus in {text!r}") from e
        tail = parts[1].strip()
        if tail:
            try:
                orders = tuple(int(t) for t in tail.split(","))
            except ValueError as e:
                raise ParseError(f"bad orders in {text!r}") from e
        else:
            orders = ()
        return OrbifoldType(genus, orders)

    def __str__(self):
        return f"{self.genus};" + ",".join(str(p) for p in self.orders)


def orbifold_euler(t: OrbifoldType) -> Fraction:
    """Orbifold Euler characteristic 2 - 2g - sum(1 - 1/p)."""
    chi = Fraction(2 - 2 * t.genus)
    for p in t.orders:
        chi -= 1 - Fraction(1, p)
    return chi


def classify_type(t: OrbifoldType) -> CaseTag:
    """Sort a type into a construction case, or raise a typed error."""
    if orbifold_euler(t) >= 0:
        raise InvalidType(f"type {t} is not hyperbolic")
    g, orders = t.genus, t.orders
    n = len(orders)
    if g == 0:
        k = sum(1 for p in orders if p == 2)
        if k == n:
            return CaseTag.SPHERE_ALL_ORDER2
        if k == 0:
            return CaseTag.SPHERE_ALL_BIG
        if k == 1:
            raise UncoveredCase(
                "sphere with exactly one order-2 cone point is not covered"
            )
        return CaseTag.SPHERE_MIXED
    if n == 0:
        return CaseTag.SURFACE_NO_CONE
    if n > 2 * g + 6:
        raise NotSmallType(f"type {t} has more than 2g+6 cone points")
    if n >= 2 * g + 2:
        if any(p == 2 for p in orders):
            raise UncoveredCase(
                "positive genus with n >= 2g+2 cone points requires all "
                "orders at least 3"
            )
        if n == 2 * g + 2:
            return CaseTag.GENUS_BUTTERFLY
        return CaseTag.GENUS_BUTTERFLY_EXTRA
    return CaseTag.GENUS_MIXED


def canonical_orders(t: OrbifoldType, case: CaseTag) -> tuple:
    """Order the cone orders as the construction needs them (order-2
    points first for the mixed sphere case)."""
    if case is CaseTag.SPHERE_MIXED:
        twos = tuple(p for p in t.orders if p == 2)
        rest = tuple(p for p in t.orders if p != 2)
        return twos + rest
    return t.orders


def _anti_bar(g: hg.Isometry) -> hg.Isometry:
    """Entrywise conjugate of an isometry (conjugation by z -> conj z)."""
    return hg.Isometry(g.a.conjugate(), g.b.conjugate(), normalize=False)


def anti_after_iso(refl: hg.Reflection, g: hg.Isometry) -> hg.Reflection:
    """The anti-isometry refl o g."""
    return hg.Reflection(refl.m.compose(_anti_bar(g)))


def anti_inverse(refl: hg.Reflection) -> hg.Reflection:
    """Inverse of an anti-isometry."""
    return hg.Reflection(_anti_bar(refl.m.inverse()))


@dataclass
class SidePairing:
    """One directed gluing: crossing this side lands on the partner side."""

    face: str
    index: int
    partner_face: str
    partner_index: int
    edge_class: str
    glue: hg.Reflection  # anti-map taking this side onto the partner side
    step: hg.Isometry  # next placement = current placement o step
    wall_curve: str | None  # closed-curve name carried by this edge, if any
    white_face: str | None  # face entered when crossing the curve positively


@dataclass
class VertexClass:
    """A quotient vertex: the glued corners, with order and angle sum."""

    id: int
    order: int  # 1 for a regular point
    corners: list  # list of (face, vertex_index)
    angle_sum: float


class FundamentalDomain:
    """Polygon faces with side pairings realizing one construction case."""

    def __init__(self, otype, case, faces, base_face, pairings,
                 vertex_classes, corner_class, combinatorial_only):
        self.otype = otype
        self.case = case
        self.faces = faces
        self.base_face = base_face
        self.pairings = pairings
        self.vertex_classes = vertex_classes
        self.corner_class = corner_class
        self.combinatorial_only = combinatorial_only
        self.diameter = faces[base_face].diameter
        self.orders = canonical_orders(otype, case)

    def side_segment(self, face: str, index: int) -> hg.GeodesicSegment:
        return self.faces[face].sides[index]

    def face_of_point(self, z, tol: float = 1e-12) -> str | None:
        for name, poly in self.faces.items():
            if poly.contains(z, tol=tol):
                return name
        return None

    def check_pairings(self, tol: float = 1e-8) -> None:
        """Verify involutivity and that glue maps send sides onto sides."""
        for (face, i), sp in self.pairings.items():
            back = self.pairings[(sp.partner_face, sp.partner_index)]
            if (back.partner_face, back.partner_index) != (face, i):
                raise ConstructionFailure(
                    f"pairing of {face} side {i} is not involutive"
                )
            seg = self.side_segment(face, i)
            pseg = self.side_segment(sp.partner_face, sp.partner_index)
            ok = all(
                min(abs(img - pseg.start), abs(img - pseg.end)) < tol
                for img in (sp.glue.apply(seg.start), sp.glue.apply(seg.end))
            )
            if not ok:
                raise ConstructionFailure(
                    f"glue map of {face} side {i} misses the partner side"
                )
            comp = sp.step.compose(back.step)
            if not comp.almost_equal(hg.Isometry.identity(), tol):
                raise ConstructionFailure(
                    f"development step across {face} side {i} is not involutive"
                )


def _locate_side(poly: pg.RealizedPolygon, p: complex, q: complex,
                 tol: float = 1e-9) -> int:
    for i, s in enumerate(poly.sides):
        if (abs(s.start - p) < tol and abs(s.end - q) < tol) or (
            abs(s.start - q) < tol and abs(s.end - p) < tol
        ):
            return i
    raise ConstructionFailure("identified side not found on partner face")


def _locate_vertex(poly: pg.RealizedPolygon, p: complex,
                   tol: float = 1e-9) -> int:
    for i, v in enumerate(poly.vertices):
        if abs(v - p) < tol:
            return i
    raise ConstructionFailure("identified vertex not found on partner face")


def _vertex_classes(faces, identifications, orders_of_class):
    """Union-find over corners driven by the side identifications."""
    corners = [
        (fname, i) for fname, poly in faces.items()
        for i in range(poly.n)
    ]
    parent = {c: c for c in corners}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    def union(c1, c2):
        r1, r2 = find(c1), find(c2)
        if r1 != r2:
            parent[r2] = r1

    for face, i, pface, glue in identifications:
        poly, ppoly = faces[face], faces[pface]
        seg = poly.sides[i]
        for endp, vidx in ((seg.start, i), (seg.end, (i + 1) % poly.n)):
            pv = _locate_vertex(ppoly, glue.apply(endp))
            union((face, vidx), (pface, pv))

    groups = {}
    for c in corners:
        groups.setdefault(find(c), []).append(c)
    classes = []
    corner_class = {}
    for cid, (root, members) in enumerate(sorted(groups.items())):
        angle = sum(faces[f].measured_angles[i] for f, i in members)
        order = orders_of_class(members)
        expected = 2.0 * math.pi / order
        if abs(angle - expected) > 1e-7:
            raise ConstructionFailure(
                f"vertex class {members} has angle sum {angle:.9f}, "
                f"expected {expected:.9f}"
            )
        classes.append(VertexClass(cid, order, members, angle))
        for m in members:
            corner_class[m] = cid
    return classes, corner_class


def _genus_angles(g: int, orders: tuple) -> tuple:
    N = 2 * g + 2
    n = len(orders)
    return tuple(
        math.pi / (2.0 * orders[i]) if i < n else math.pi / 2.0
        for i in range(N)
    )


def _build_genus_domain(otype, case, orders):
    """Faces A, B, C, D glued around the corner a_1.

    B and D are the reflections of A across the sides at a_1; C is the
    rotation of A about a_1 by minus the half cone angle there.
    """
    g = otype.genus
    N = 2 * g + 2
    n = len(orders)
    # an even cone count in the mixed case is handled by placing the last
    # cone in the interior of face A; it changes no combinatorial count,
    # and the domain is flagged combinatorial-only
    mixed_even = case is CaseTag.GENUS_MIXED and n % 2 == 0
    if mixed_even:
        n -= 1
        orders = orders[:n]
    angles = _genus_angles(g, orders)
    if all(abs(a - math.pi / 2.0) < 1e-15 for a in angles):
        A = pg.realize_regular_right_angled(N)
    else:
        A = pg.realize_star(pg.PolygonSpec(angles))
    a1 = A.vertices[0]
    # side j (1-based) is [a_j, a_{j+1}] = A.sides[j-1]
    s_h = hg.reflection_across(A.sides[0].carrier)       # across (a_1 a_2)
    s_v = hg.reflection_across(A.sides[N - 1].carrier)   # across (a_1 a_{2g+2})
    p1 = orders[0] if n >= 1 else 1
    r = hg.rotation_about(a1, -math.pi / p1)
    B = A.reflected(s_h)
    D = A.reflected(s_v)
    C = A.transformed(r)
    faces = {"A": A, "B": B, "C": C, "D": D}
    _assert_disjoint_faces(faces)

    r_inv = r.inverse()
    identifications = []  # (face, side_idx, partner_face, glue anti-map)
    pair_specs = []
    for j in range(1, N + 1):
        i = j - 1
        even = j % 2 == 0
        # side j carries a closed curve when it holds no cone point; in the
        # mixed case the last side is left free (its curve is redundant)
        carries = j > n and not (case is CaseTag.GENUS_MIXED and j == N)
        # one closed curve covers both walls e_j and e'_j: it is the
        # concatenation of the two edges, which meet at angle pi
        wall_curve = f"alpha{j}" if carries else None
        wall_curve_p = wall_curve
        if even:
            # [a_j a_{j+1}] with s_v-image in D;  r-image with s_h-image in B
            pair_specs.append(("A", i, "D", s_v, f"e{j}", wall_curve, "A"))
            glue_cb = anti_after_iso(s_h, r_inv)
            pair_specs.append(("C", i, "B", glue_cb, f"e'{j}", wall_curve_p, "C"))
        else:
            pair_specs.append(("A", i, "B", s_h, f"e{j}", wall_curve, "A"))
            glue_cd = anti_after_iso(s_v, r_inv)
            pair_specs.append(("C", i, "D", glue_cd, f"e'{j}", wall_curve_p, "C"))

    pairings = {}
    for face, i, pface, glue, cls, wall, white in pair_specs:
        seg = faces[face].sides[i]
        pi_ = _locate_side(faces[pface], glue.apply(seg.start), glue.apply(seg.end))
        refl_s = hg.reflection_across(seg.carrier)
        step = refl_s.compose(anti_inverse(glue))
        pseg = faces[pface].sides[pi_]
        prefl = hg.reflection_across(pseg.carrier)
        back_glue = anti_inverse(glue)
        back_step = prefl.compose(anti_inverse(back_glue))
        pairings[(face, i)] = SidePairing(
            face, i, pface, pi_, cls, glue, step, wall, white
        )
        pairings[(pface, pi_)] = SidePairing(
            pface, pi_, face, i, cls, back_glue, back_step, wall, white
        )
        identifications.append((face, i, pface, glue))

    def orders_of_class(members):
        # cone order of the class containing corner a_i of A
        for f, vi in members:
            if f == "A":
                return orders[vi] if vi < n else 1
        raise ConstructionFailure("vertex class misses face A")

    classes, corner_class = _vertex_classes(faces, identifications, orders_of_class)
    combinatorial = case is CaseTag.GENUS_BUTTERFLY_EXTRA or mixed_even
    return FundamentalDomain(
        otype, case, faces, "A", pairings, classes, corner_class, combinatorial
    )


def _assert_disjoint_faces(faces):
    names = list(faces)
    for i, x in enumerate(names):
        for y in names[i + 1:]:
            cx = faces[x].center
            if faces[y].contains(cx, tol=-1e-9):
                raise ConstructionFailure(
                    f"faces {x} and {y} overlap in the developed domain"
                )


def _build_sphere_domain(otype, case, orders):
    """Faces E and F glued along the whole equator."""
    n = len(orders)
    angles = tuple(math.pi / p for p in orders)
    if all(p == 2 for p in orders):
        E = pg.realize_regular_right_angled(n)
    else:
        E = pg.realize_star(pg.PolygonSpec(angles))
    sigma = hg.reflection_across(E.sides[0].carrier)  # across (b_1 b_2)
    F = E.reflected(sigma)
    faces = {"E": E, "F": F}
    _assert_disjoint_faces(faces)

    k = sum(1 for p in orders if p == 2)
    pairings = {}
    identifications = []
    for j in range(1, n + 1):
        i = j - 1
        if case is CaseTag.SPHERE_ALL_ORDER2:
            wall = f"beta{j}"
        elif case is CaseTag.SPHERE_MIXED and j <= k - 1:
            wall = f"beta{j}"
        else:
            wall = None
        seg = E.sides[i]
        pi_ = _locate_side(F, sigma.apply(seg.start), sigma.apply(seg.end))
        refl_s = hg.reflection_across(seg.carrier)
        step = refl_s.compose(anti_inverse(sigma))
        pseg = F.sides[pi_]
        prefl = hg.reflection_across(pseg.carrier)
        back_step = prefl.compose(anti_inverse(sigma))
        pairings[("E", i)] = SidePairing(
            "E", i, "F", pi_, f"b{j}", sigma, step, wall, "E"
        )
        pairings[("F", pi_)] = SidePairing(
            "F", pi_, "E", i, f"b{j}", sigma, back_step, wall, "E"
        )
        identifications.append(("E", i, "F", sigma))

    def orders_of_class(members):
        for f, vi in members:
            if f == "E":
                return orders[vi]
        raise ConstructionFailure("vertex class misses face E")

    classes, corner_class = _vertex_classes(faces, identifications, orders_of_class)
    return FundamentalDomain(
        otype, case, faces, "E", pairings, classes, corner_class, False
    )


def build_domain(otype: OrbifoldType) -> FundamentalDomain:
    """Realize the fundamental domain for a hyperbolic type."""
    case = classify_type(otype)
    orders = canonical_orders(otype, case)
    if case in (CaseTag.SURFACE_NO_CONE, CaseTag.GENUS_BUTTERFLY,
                CaseTag.GENUS_BUTTERFLY_EXTRA, CaseTag.GENUS_MIXED):
        dom = _build_genus_domain(otype, case, orders)
    else:
        dom = _build_sphere_domain(otype, case, orders)
    dom.check_pairings()
    return dom


@dataclass
class StarCorner:
    """One polygon corner inside a vertex star."""

    face: str
    vertex_index: int
    offset: float  # star coordinate of the corner's leading ray
    angle: float
    lead_edge: str  # quotient edge class of the leading ray (side vertex_index)
    trail_edge: str  # quotient edge class of the trailing ray


class VertexStar:
    """Cyclic angular coordinates around one vertex class.

    The star is the unit-tangent fiber at the vertex: a circle of
    circumference 2*pi/order, with the incident quotient-edge directions
    sitting at known coordinates.
    """

    def __init__(self, domain, class_id):
        vc = domain.vertex_classes[class_id]
        self.class_id = class_id
        self.order = vc.order
        self.total = 2.0 * math.pi / vc.order
        self.corners = []
        self.edge_coords = {}  # edge class -> star coordinate of its ray
        face, vi = min(vc.corners)
        offset = 0.0
        for _ in range(len(vc.corners)):
            poly = domain.faces[face]
            lead_side = vi
            trail_side = (vi - 1) % poly.n
            lead_cls = domain.pairings[(face, lead_side)].edge_class
            trail_cls = domain.pairings[(face, trail_side)].edge_class
            self.corners.append(StarCorner(
                face, vi, offset, poly.measured_angles[vi], lead_cls, trail_cls
            ))
            self.edge_coords.setdefault(lead_cls, offset)
            offset += poly.measured_angles[vi]
            # cross the trailing side counterclockwise to the next corner
            sp = domain.pairings[(face, trail_side)]
            v = poly.vertices[vi]
            nface = sp.partner_face
            nvi = _locate_vertex(domain.faces[nface], sp.glue.apply(v))
            face, vi = nface, nvi
        if (face, vi) != min(vc.corners):
            raise ConstructionFailure(
                f"vertex star of class {class_id} does not close up"
            )
        if abs(offset - vc.angle_sum) > 1e-9:
            raise ConstructionFailure(
                f"vertex star of class {class_id} has angle {offset:.9f}, "
                f"expected {vc.angle_sum:.9f}"
            )
        self._domain = domain

    def corner_of_face(self, face, vertex_index):
        for c in self.corners:
            if c.face == face and c.vertex_index == vertex_index:
                return c
        raise ConstructionFailure("corner not in this vertex star")

    def coord_of_direction(self, face, vertex_index, direction) -> float:
        """Star coordinate of a tangent direction given in the canonical
        coordinates of one corner's face."""
        c = self.corner_of_face(face, vertex_index)
        poly = self._domain.faces[face]
        v = poly.vertices[vertex_index]
        lead = hg.direction_from(v, poly.vertices[(vertex_index + 1) % poly.n])
        rel = hg.norm_angle(direction - lead)
        return (c.offset + rel) % self.total

    def wrap(self, coord: float) -> float:
        return coord % self.total

    def opposite(self, coord: float) -> float:
        """Star coordinate of the reversed direction (wraps at cone points)."""
        return (coord + math.pi) % self.total


@dataclass
class FaceVisit:
    """One traversal of a developed face copy."""

    face: str
    place: hg.Isometry
    s_in: float
    s_out: float


@dataclass
class Crossing:
    """One side crossing during a trace."""

    s: float
    face_from: str
    face_to: str
    edge_class: str
    wall_curve: str | None
    into_white: bool | None  # crossing direction relative to the white face
    point_world: complex


@dataclass
class TraceResult:
    geodesic: hg.Geodesic
    start: complex
    length: float
    visits: list = field(default_factory=list)
    crossings: list = field(default_factory=list)


def trace_geodesic(domain: FundamentalDomain, start, direction: float,
                   length: float, start_face: str | None = None,
                   eps_vertex: float = EPS_CONE,
                   max_tiles: int = 100000) -> TraceResult:
    """Develop a geodesic ray through the domain for a given length.

    The start point must lie inside one canonical face.  Raises
    NearSingular when the trace passes within eps_vertex of a vertex.
    """
    z0 = hg._z(start)
    if start_face is None:
        start_face = domain.face_of_point(z0, tol=-1e-12)
        if start_face is None:
            raise ConstructionFailure("trace start is not inside any face")
    G = hg.ray_geodesic(z0, direction)
    T = hg.map_to_real_axis(G)
    x0 = T.apply(z0).real
    s0 = 2.0 * math.atanh(x0)

    def sparam(p) -> float:
        x = T.apply(p).real
        x = min(1.0 - 1e-16, max(-1.0 + 1e-16, x))
        return 2.0 * math.atanh(x) - s0

    result = TraceResult(G, z0, length)
    face = start_face
    place = hg.Isometry.identity()
    s_cur = 0.0
    entry_side = None
    for _ in range(max_tiles):
        inv = place.inverse()
        L = hg.Geodesic(
            inv.apply_boundary(G.theta1), inv.apply_boundary(G.theta2)
        )
        poly = domain.faces[face]
        best = None
        for i, side in enumerate(poly.sides):
            if i == entry_side:
                continue
            x = hg.intersect(L, side.carrier)
            if x is None:
                continue
            if not side.contains(x, tol=1e-7):
                continue
            s = sparam(place.apply(x))
            if s <= s_cur + 1e-11:
                continue
            if best is None or s < best[0]:
                best = (s, i, x)
        if best is None:
            raise ConstructionFailure(
                "trace found no exit side; development lost the ray"
            )
        s_exit, i_exit, x_exit = best
        seg = poly.sides[i_exit]
        if (
            hg.distance(x_exit, seg.start) < eps_vertex
            or hg.distance(x_exit, seg.end) < eps_vertex
        ):
            raise NearSingular(
                f"trace exits face {face} within eps of a vertex"
            )
        if s_exit >= length:
            result.visits.append(FaceVisit(face, place, s_cur, length))
            return result
        result.visits.append(FaceVisit(face, place, s_cur, s_exit))
        sp = domain.pairings[(face, i_exit)]
        into_white = None
        if sp.wall_curve is not None:
            into_white = sp.partner_face == sp.white_face
        result.crossings.append(Crossing(
            s_exit, face, sp.partner_face, sp.edge_class, sp.wall_curve,
            into_white, place.apply(x_exit),
        ))
        place = place.compose(sp.step)
        face = sp.partner_face
        entry_side = sp.partner_index
        s_cur = s_exit
    raise ConstructionFailure("trace exceeded the development tile budget")
