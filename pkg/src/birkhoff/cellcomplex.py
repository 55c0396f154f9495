"""Surface pieces of the section and the exact genus-one bookkeeping.

The section surface is cut along the boundary-curve lifts and along the
fibers of the marked points into elementary pieces: rectangles over the
edge curves, wings over the triangular and quadrilateral regions cut
out by crossing curves, and annuli around the junction vertices (or the
outermost order-2 cones).  Assembling the pieces into a cell complex
gives the Euler characteristic twice over -- once by exact cell counts
and once by per-piece fractional accounting -- together with the
boundary orbit cycles and their self-linking numbers, from which the
genus of the section is computed exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .curves import (
    ANNULUS_CONTACT,
    BUTTERFLY_BODY,
    RECTANGLE_CORNER,
    WING_TIP,
    CurveSystem,
)
from .errors import ClassificationFailure, ConstructionFailure, GluingFailure
from .orbifold import CaseTag

# piece kinds
RECTANGLE = "rectangle"
WING = "wing"
ANNULUS = "annulus"

_WING_REGION_KINDS = {"T-", "T+", "K", "Kp"}
_ANNULUS_REGION_KINDS = {"K0", "Kn", "bigon"}

# contribution of one fiber point to the self-linking of the orbit
# passing over it: a half-turn of the surface framing at tips and
# rectangle corners, an opposite half-turn at butterfly bodies, and no
# turn at annulus contacts
_SLK_WEIGHT = {
    WING_TIP: Fraction(-1, 2),
    BUTTERFLY_BODY: Fraction(1, 2),
    RECTANGLE_CORNER: Fraction(-1, 2),
    ANNULUS_CONTACT: Fraction(0),
}

_ADJ_EPS = 1e-6


@dataclass
class HorizCell:
    """One horizontal boundary edge: a curve-lift segment between two
    consecutive fiber points, traversed from `start` to `end`."""

    key: tuple
    curve: str
    lift: str  # "+" or "-"
    start: tuple  # vertex cell key where the traversal begins
    end: tuple
    ev_from: object  # event opening the underlying base segment
    ev_to: object


@dataclass
class SurfacePiece:
    name: str
    kind: str  # rectangle | wing | annulus
    region: str | None = None
    edge: str | None = None  # rectangle: edge class it lies over
    side: str | None = None  # rectangle: face it sweeps into
    apex: str | None = None  # wing: butterfly body point
    turning: str | None = None  # wing: left/right; annulus: cw/ccw
    cone_point: str | None = None  # annulus: central vertex point
    faces: list = field(default_factory=list)
    horizontals: list = field(default_factory=list)  # HorizCell
    verticals: list = field(default_factory=list)  # cell keys
    vertices: list = field(default_factory=list)  # cell keys
    radials: list = field(default_factory=list)  # annulus cut edges

    def cell_keys(self):
        return (self.faces + self.radials + [h.key for h in self.horizontals]
                + self.verticals + self.vertices)


@dataclass
class BoundaryOrbit:
    name: str
    curve: str
    lift: str
    cells: list  # HorizCell, in traversal order


@dataclass
class SurfaceComplex:
    system: CurveSystem
    tag: CaseTag
    pieces: dict  # name -> SurfacePiece
    multiplicity: Counter  # cell key -> number of owning pieces
    circle_keys: set  # cells lying on an annulus central fiber circle
    chains: dict  # curve label -> (plus cells, minus cells)


@dataclass
class GenusReport:
    chi_cell_count: int
    chi_fractional: Fraction
    boundary_components: int
    genus: int
    per_orbit_self_linking: dict  # orbit name -> Fraction
    per_piece_contributions: dict  # piece name -> Fraction


def _circ_dist(a, b, total):
    d = (a - b) % total
    return min(d, total - d)


def _plus_node(ev):
    return ("P", ev.point, ev.dir_out)


def _minus_node(ev):
    return ("P", ev.point, ev.dir_in)


def _chains_for_curve(cur):
    """Horizontal cells of the forward (and, for doubled curves, the
    backward) lift, one per segment between consecutive events."""
    evs = cur.events
    if not evs:
        raise ConstructionFailure(f"curve {cur.label} carries no events")
    m = len(evs)
    # the doubled edge curves traverse their single arc forth and back,
    # so their event list is linear, not cyclic
    linear = cur.kind == "edgeDouble"
    rng = range(m - 1) if linear else range(m)
    plus, minus = [], []
    for i in rng:
        j = (i + 1) % m
        plus.append(HorizCell(
            ("H", cur.label, "+", i), cur.label, "+",
            _plus_node(evs[i]), _plus_node(evs[j]), evs[i], evs[j],
        ))
    if cur.lift_kind == "doubleCover":
        for i in rng:
            j = (i + 1) % m
            minus.append(HorizCell(
                ("H", cur.label, "-", i), cur.label, "-",
                _minus_node(evs[j]), _minus_node(evs[i]), evs[i], evs[j],
            ))
    return plus, minus


def _portions(cur, ev1, ev2):
    """Within-face pieces of the curve between two consecutive events,
    as (arc index, start fraction, end fraction) triples."""
    m = len(cur.arcs)
    if ev1.arc_index == ev2.arc_index and ev1.t < ev2.t:
        return [(ev1.arc_index, ev1.t, ev2.t)]
    out = [(ev1.arc_index, ev1.t, 1.0)]
    k = (ev1.arc_index + 1) % m
    for _ in range(m + 1):
        if k == ev2.arc_index:
            break
        out.append((k, 0.0, 1.0))
        k = (k + 1) % m
    else:
        raise ConstructionFailure(
            f"segment of {cur.label} between events does not close"
        )
    out.append((ev2.arc_index, 0.0, ev2.t))
    return out


def _segment_adjacency(system, cur, ev1, ev2):
    """Region names on the left and right of the curve segment between
    two consecutive events, sampled at its longest within-face part."""
    parts = _portions(cur, ev1, ev2)
    k, t1, t2 = max(
        parts, key=lambda p: (p[2] - p[1]) * cur.arcs[p[0]].seg.length
    )
    if (t2 - t1) * cur.arcs[k].seg.length <= 0:
        raise ConstructionFailure(
            f"zero-length segment of {cur.label} between "
            f"{ev1.point} and {ev2.point}"
        )
    arc = cur.arcs[k]
    z = arc.seg.point_at_fraction(0.5 * (t1 + t2))
    tv = arc.seg.carrier.tangent_at(z)
    tv /= abs(tv)
    left = system.tessellation.classify(arc.face, z + _ADJ_EPS * 1j * tv)
    right = system.tessellation.classify(arc.face, z - _ADJ_EPS * 1j * tv)
    if left == right:
        raise ClassificationFailure(
            f"segment of {cur.label} after {ev1.point} has region "
            f"{left} on both sides"
        )
    return left, right


def _half_fiber(system, pt, own_label, white_face):
    """Fiber marks swept by a rectangle's vertical side at one endpoint:
    half the fiber starting at the rectangle's own edge ray, on the side
    of its white face.  At an order-2 cone the doubled sweep covers the
    whole fiber.  Returns (mark labels, counterclockwise arc starts)."""
    fiber = pt.fiber
    total = fiber.circumference
    labels = [lab for lab, _ in fiber.ordered()]
    if math.pi >= total - 1e-9:
        i = labels.index(own_label)
        cyc = labels[i:] + labels[:i]
        return cyc, list(cyc)
    star = system.stars[pt.vertex_class]
    corner = next(c for c in star.corners if c.face == white_face)
    mid = (corner.offset + 0.5 * corner.angle) % total
    c0 = fiber.dirs[own_label]
    anti = (c0 + math.pi) % total
    anti_label = next(
        (lab for lab, c in fiber.dirs.items()
         if _circ_dist(c, anti, total) < 1e-6),
        None,
    )
    if anti_label is None:
        raise GluingFailure(
            f"fiber of {pt.name} has no mark opposite {own_label}"
        )
    if (mid - c0) % total < math.pi:
        path = fiber.arc_labels(own_label, anti_label)
    else:
        path = fiber.arc_labels(anti_label, own_label)
    return path, path[:-1]


def _full_fiber_cells(point_name, fiber):
    labels = [lab for lab, _ in fiber.ordered()]
    arcs = [("V", point_name, lab) for lab in labels]
    verts = [("P", point_name, lab) for lab in labels]
    return arcs, verts


def _build_rectangle(system, cur, cell_range, ev_s, ev_e, plus, minus):
    edge_cls = ev_s.dir_out.removeprefix("ray:")
    white_face = cur.arcs[ev_s.arc_index if cur.kind != "edgeDouble"
                          else 0].face
    piece = SurfacePiece(
        name=f"R({edge_cls})", kind=RECTANGLE,
        edge=edge_cls, side=white_face,
    )
    piece.faces.append(("F", piece.name))
    minus_by_idx = {c.key[3]: c for c in minus}
    evs = cur.events
    for i in cell_range:
        piece.horizontals.append(plus[i])
        piece.horizontals.append(minus_by_idx[i])
        ev = evs[(i + 1) % len(evs)]
        if system.points[ev.point].kind == ANNULUS_CONTACT:
            # the lift passes over a contact fiber without turning: a
            # plain subdivision vertex on each of the two lift sides
            piece.vertices.append(_plus_node(ev))
            piece.vertices.append(_minus_node(ev))
    for pt_name, own in ((ev_s.point, ev_s.dir_out),
                         (ev_e.point, ev_e.dir_in)):
        pt = system.points[pt_name]
        marks, arc_starts = _half_fiber(system, pt, own, white_face)
        piece.verticals.extend(("V", pt_name, lab) for lab in arc_starts)
        piece.vertices.extend(("P", pt_name, lab) for lab in set(marks))
    return piece


def _rectangles_for_curve(system, cur, plus, minus):
    evs = cur.events
    corner_idx = [
        i for i, ev in enumerate(evs)
        if system.points[ev.point].kind == RECTANGLE_CORNER
    ]
    if cur.kind == "edgeDouble":
        if corner_idx != [0, len(evs) - 1]:
            raise ConstructionFailure(
                f"edge curve {cur.label} has corners at {corner_idx}"
            )
        yield _build_rectangle(
            system, cur, range(len(evs) - 1), evs[0], evs[-1], plus, minus
        )
        return
    if len(corner_idx) != 2 or corner_idx[0] != 0:
        raise ConstructionFailure(
            f"edge curve {cur.label} has corners at {corner_idx}"
        )
    v1 = corner_idx[1]
    yield _build_rectangle(
        system, cur, range(0, v1), evs[0], evs[v1], plus, minus
    )
    yield _build_rectangle(
        system, cur, range(v1, len(evs)), evs[v1], evs[0], plus, minus
    )


def _corner_incidences(system, sides):
    """Side-end labels collected per boundary point of a region: point
    name -> list of fiber mark labels of the forward lift there."""
    ends = {}
    for cell in sides:
        for ev in (cell.ev_from, cell.ev_to):
            ends.setdefault(ev.point, []).append(ev.dir_out)
    return ends


def _check_cycle(sides, name):
    """The sides of a piece boundary must form one closed walk through
    its corner points."""
    if not sides:
        raise GluingFailure(f"{name} has no boundary sides")
    adj = {}
    for cell in sides:
        for ev in (cell.ev_from, cell.ev_to):
            adj.setdefault(ev.point, []).append(cell)
    for pt, cells in adj.items():
        if len(cells) != 2:
            raise GluingFailure(
                f"{name} meets the fiber of {pt} {len(cells)} times"
            )
    seen = {id(sides[0])}
    cur, prev_pt = sides[0], sides[0].ev_from.point
    for _ in range(len(sides) - 1):
        nxt_pt = (cur.ev_to.point if cur.ev_from.point == prev_pt
                  else cur.ev_from.point)
        nxt = next(c for c in adj[nxt_pt] if id(c) != id(cur))
        if id(nxt) in seen:
            raise GluingFailure(f"{name} boundary is not a single cycle")
        seen.add(id(nxt))
        cur, prev_pt = nxt, nxt_pt
    if len(seen) != len(sides):
        raise GluingFailure(f"{name} boundary is not a single cycle")


def _build_wing(system, region, sides):
    piece = SurfacePiece(name=f"H({region.name})", kind=WING,
                         region=region.name)
    piece.faces.append(("F", piece.name))
    piece.horizontals.extend(sides)
    _check_cycle(sides, piece.name)
    want = 3 if region.kind in ("T-", "T+") else 4
    if len(sides) != want:
        raise GluingFailure(
            f"{piece.name} has {len(sides)} sides, expected {want}"
        )
    apex = None
    for pt_name, labels in _corner_incidences(system, sides).items():
        la, lb = labels
        if la == lb:
            raise GluingFailure(
                f"{piece.name} has a degenerate vertical arc at {pt_name}"
            )
        piece.verticals.append(("V", pt_name, frozenset((la, lb))))
        piece.vertices.append(("P", pt_name, la))
        piece.vertices.append(("P", pt_name, lb))
        if system.points[pt_name].kind == BUTTERFLY_BODY:
            if apex is not None:
                raise GluingFailure(f"{piece.name} has two body corners")
            apex = pt_name
    if apex is None:
        raise GluingFailure(f"{piece.name} has no body corner")
    piece.apex = apex
    if region.kind == "T-":
        piece.turning = "right"
    elif region.kind == "T+":
        piece.turning = "left"
    else:
        j = int(region.name.strip("K'"))
        piece.turning = "right" if j % 2 == 1 else "left"
    return piece


def _build_annulus(system, region, sides):
    piece = SurfacePiece(name=f"H({region.name})", kind=ANNULUS,
                         region=region.name)
    piece.faces.append(("F", piece.name))
    piece.radials.append(("E", piece.name, "radial"))
    piece.horizontals.extend(sides)
    _check_cycle(sides, piece.name)
    want = 3 if region.kind == "bigon" else 6
    if len(sides) != want:
        raise GluingFailure(
            f"{piece.name} has {len(sides)} sides, expected {want}"
        )
    for pt_name, labels in _corner_incidences(system, sides).items():
        kind = system.points[pt_name].kind
        la, lb = labels
        if kind == ANNULUS_CONTACT:
            if la != lb:
                raise GluingFailure(
                    f"{piece.name} does not pass straight through the "
                    f"contact {pt_name}"
                )
            piece.vertices.append(("P", pt_name, la))
        elif kind == WING_TIP:
            if la == lb:
                raise GluingFailure(
                    f"{piece.name} has a degenerate vertical arc at "
                    f"{pt_name}"
                )
            piece.verticals.append(("V", pt_name, frozenset((la, lb))))
            piece.vertices.append(("P", pt_name, la))
            piece.vertices.append(("P", pt_name, lb))
        else:
            raise GluingFailure(
                f"{piece.name} boundary meets unexpected {kind} point "
                f"{pt_name}"
            )
    center = next(
        (name for name, pt in system.points.items()
         if pt.vertex_class == region.cone_class and pt.fiber is not None),
        None,
    )
    if center is None:
        raise GluingFailure(
            f"{piece.name} has no marked central vertex point"
        )
    arcs, verts = _full_fiber_cells(center, system.points[center].fiber)
    piece.verticals.extend(arcs)
    piece.vertices.extend(verts)
    piece.cone_point = center
    piece.turning = "ccw" if region.kind in ("K0",) else \
        ("cw" if region.kind == "Kn" else
         ("cw" if region.name == "K1" else "ccw"))
    return piece


def _expected_piece_counts(system, tag):
    g = system.domain.otype.genus
    orders = system.domain.orders
    n = len(orders)
    if tag is CaseTag.SURFACE_NO_CONE:
        return {RECTANGLE: 4 * g + 4, WING: 0, ANNULUS: 0}
    if tag is CaseTag.SPHERE_ALL_ORDER2:
        return {RECTANGLE: n, WING: 0, ANNULUS: 0}
    if tag is CaseTag.SPHERE_ALL_BIG:
        return {RECTANGLE: 0, WING: 2 * n, ANNULUS: 0}
    if tag in (CaseTag.GENUS_BUTTERFLY, CaseTag.GENUS_BUTTERFLY_EXTRA):
        return {RECTANGLE: 0, WING: 4 * g + 4, ANNULUS: 0}
    if tag is CaseTag.SPHERE_MIXED:
        k = sum(1 for p in orders if p == 2)
        return {RECTANGLE: k - 1, WING: 2 * (n - k - 1), ANNULUS: 2}
    if tag is CaseTag.GENUS_MIXED:
        ne = n - 1 if n % 2 == 0 else n
        return {RECTANGLE: 2 * (2 * g + 1 - ne),
                WING: 2 * (ne - 1), ANNULUS: 2}
    raise ConstructionFailure(f"no piece inventory for case {tag}")


def assemble(system: CurveSystem, tag: CaseTag | None = None) -> SurfaceComplex:
    """Cut the section into rectangles, wings and annuli over the curve
    system and glue them into a verified cell complex."""
    tag = tag or system.case
    chains = {}
    for label, cur in system.curves.items():
        chains[label] = _chains_for_curve(cur)

    # sides of wings and annuli: every forward-lift segment of a
    # single-lift curve belongs to exactly one piece-bearing region
    region_sides = {}
    for label, cur in system.curves.items():
        if cur.lift_kind != "single":
            continue
        plus, _ = chains[label]
        for cell in plus:
            left, right = _segment_adjacency(
                system, cur, cell.ev_from, cell.ev_to
            )
            owners = [
                r for r in (left, right)
                if system.tessellation.regions[r].kind
                in _WING_REGION_KINDS | _ANNULUS_REGION_KINDS
            ]
            if len(owners) != 1:
                raise ClassificationFailure(
                    f"segment {cell.key} borders piece regions {owners}"
                )
            region_sides.setdefault(owners[0], []).append(cell)

    pieces = {}

    def add(piece):
        if piece.name in pieces:
            raise GluingFailure(f"duplicate piece {piece.name}")
        pieces[piece.name] = piece

    circle_keys = set()
    for rname, region in system.tessellation.regions.items():
        if region.kind in _WING_REGION_KINDS:
            if rname not in region_sides:
                raise GluingFailure(f"region {rname} collected no sides")
            add(_build_wing(system, region, region_sides.pop(rname)))
        elif region.kind in _ANNULUS_REGION_KINDS:
            if rname not in region_sides:
                raise GluingFailure(f"region {rname} collected no sides")
            piece = _build_annulus(system, region, region_sides.pop(rname))
            circle_keys.update(
                k for k in piece.verticals + piece.vertices
                if k[1] == piece.cone_point
            )
            add(piece)
    if region_sides:
        raise ClassificationFailure(
            f"curve segments left over in regions {sorted(region_sides)}"
        )

    for label, cur in system.curves.items():
        if cur.lift_kind != "doubleCover":
            continue
        plus, minus = chains[label]
        for piece in _rectangles_for_curve(system, cur, plus, minus):
            add(piece)

    cx = SurfaceComplex(
        system=system, tag=tag, pieces=pieces,
        multiplicity=_multiplicity(pieces), circle_keys=circle_keys,
        chains=chains,
    )
    verify_gluing(cx)
    counts = Counter(p.kind for p in pieces.values())
    expect = _expected_piece_counts(system, tag)
    for kind, c in expect.items():
        if counts.get(kind, 0) != c:
            raise GluingFailure(
                f"assembled {counts.get(kind, 0)} {kind} pieces, "
                f"expected {c}"
            )
    return cx


def _multiplicity(pieces):
    mult = Counter()
    for piece in pieces.values():
        mult.update(piece.cell_keys())
    return mult


def verify_gluing(cx: SurfaceComplex):
    """Every horizontal edge lies on exactly one piece; every vertical
    arc is shared by exactly two (the annulus fiber circles are matched
    against the rectangle stacks around the same vertex)."""
    cx.multiplicity = _multiplicity(cx.pieces)
    for key, m in cx.multiplicity.items():
        if key[0] in ("F", "E") and m != 1:
            raise GluingFailure(f"cell {key} owned by {m} pieces")
        if key[0] == "H" and m != 1:
            raise GluingFailure(
                f"horizontal edge {key} lies on {m} pieces"
            )
        if key[0] == "V" and m != 2:
            raise GluingFailure(
                f"vertical arc over the fiber of {key[1]} is matched by "
                f"{m} pieces instead of 2"
            )
    expected = set()
    for label, (plus, minus) in cx.chains.items():
        expected.update(c.key for c in plus)
        expected.update(c.key for c in minus)
    owned = {
        h.key for piece in cx.pieces.values() for h in piece.horizontals
    }
    if expected != owned:
        missing = sorted(expected - owned)
        extra = sorted(owned - expected)
        raise GluingFailure(
            f"horizontal cells mismatch: missing {missing}, extra {extra}"
        )


def euler_by_cells(cx: SurfaceComplex) -> int:
    """Exact Euler characteristic V - E + F of the glued complex.  Each
    annular face is cut into a disk by one radial edge with endpoints on
    existing cells, which changes nothing in the total."""
    verts = {k for k in cx.multiplicity if k[0] == "P"}
    edges = {k for k in cx.multiplicity if k[0] in ("H", "V", "E")}
    faces = {k for k in cx.multiplicity if k[0] == "F"}
    return len(verts) - len(edges) + len(faces)


def euler_by_accounting(cx: SurfaceComplex):
    """Distribute the Euler count over the pieces: each cell contributes
    1/multiplicity to every owning piece.  Cells on an annulus central
    fiber circle form a closed curve of zero net count matched once
    against the surrounding rectangle stack, so they are weighted zero
    for every owner.  Returns (total, per-piece contributions)."""
    per_piece = {}
    for name, piece in cx.pieces.items():
        total = Fraction(0)
        for key in piece.faces:
            total += 1
        for key in piece.radials:
            total -= 1
        for h in piece.horizontals:
            total -= Fraction(1, cx.multiplicity[h.key])
        for key in piece.verticals:
            if key not in cx.circle_keys:
                total -= Fraction(1, cx.multiplicity[key])
        for key in piece.vertices:
            if key not in cx.circle_keys:
                total += Fraction(1, cx.multiplicity[key])
        per_piece[name] = total
    total = sum(per_piece.values(), Fraction(0))
    cells = euler_by_cells(cx)
    if total != cells:
        raise GluingFailure(
            f"per-piece accounting gives {total}, cell count gives {cells}"
        )
    return total, per_piece


def boundary_orbits(cx: SurfaceComplex):
    """Closed cycles of horizontal edges: one per lift of each curve
    (the doubled edge curves close up through their U-turn fibers)."""
    orbits = []
    for label, cur in sorted(cx.system.curves.items()):
        plus, minus = cx.chains[label]
        if cur.lift_kind == "single":
            cycles = [(label, "+", plus)]
        elif cur.kind == "edgePair":
            cycles = [(f"{label}+", "+", plus),
                      (f"{label}-", "-", list(reversed(minus)))]
        else:
            cycles = [(label, "+-", plus + list(reversed(minus)))]
        for name, lift, cells in cycles:
            for a, b in zip(cells, cells[1:] + cells[:1]):
                if a.end != b.start:
                    raise GluingFailure(
                        f"boundary cycle {name} breaks between "
                        f"{a.key} and {b.key}"
                    )
            orbits.append(BoundaryOrbit(name, label, lift, cells))
    g = cx.system.domain.otype.genus
    expect = (len(cx.system.domain.orders)
              if cx.tag in (CaseTag.SPHERE_ALL_ORDER2,
                            CaseTag.SPHERE_ALL_BIG,
                            CaseTag.SPHERE_MIXED)
              else 4 * g + 4)
    if len(orbits) != expect:
        raise GluingFailure(
            f"found {len(orbits)} boundary orbits, expected {expect}"
        )
    return orbits


def self_linking(cx: SurfaceComplex):
    """Self-linking number of each boundary orbit: the sum of framing
    half-turns over the fiber points the orbit passes."""
    out = {}
    for orbit in boundary_orbits(cx):
        cur = cx.system.curves[orbit.curve]
        total = sum(
            (_SLK_WEIGHT[cx.system.points[ev.point].kind]
             for ev in cur.events),
            Fraction(0),
        )
        if total.denominator != 1:
            raise GluingFailure(
                f"self-linking of {orbit.name} is not an integer: {total}"
            )
        out[orbit.name] = total
    return out


def genus_report(cx: SurfaceComplex) -> GenusReport:
    """Full exact verification record for one assembled section."""
    chi = euler_by_cells(cx)
    chi_frac, per_piece = euler_by_accounting(cx)
    orbits = boundary_orbits(cx)
    slk = self_linking(cx)
    b = len(orbits)
    num = 2 - chi - b
    if num % 2 != 0:
        raise GluingFailure(
            f"chi {chi} and {b} boundary components give a non-integer "
            "genus"
        )
    return GenusReport(
        chi_cell_count=chi,
        chi_fractional=chi_frac,
        boundary_components=b,
        genus=num // 2,
        per_orbit_self_linking=slk,
        per_piece_contributions=per_piece,
    )
