"""Directed transition graph between tessellation regions.

The certification works on a coarse graph whose vertices are the large
regions of the tessellation (the face interiors plus the cone-point
regions) and whose directed edges are the region transitions a geodesic
can realize, either by crossing a wall directly or by cutting through one
of the small corridor regions that carry a surface piece.

Bold edges are the transitions forced to cross the assembled surface
positively.  They are derived from the coorientation of the pieces, which
is encoded by the white/black shading of the faces: each doubled wall
curve carries a vertical rectangle whose direction interval opens into
its white face, so crossing from the black side into the white side is
forced, while the reverse crossing is free.  The wing and annulus pieces
replace rectangles near the cone points and inherit the same
coorientation, so a corridor passage is free exactly when it descends the
shading order (white face -> cone bigon -> black face) and forced in
every other direction, including every passage through an orbifold
vertex, whose fiber is covered by the surrounding piece boundaries.

A long bold-free directed path would be the combinatorial shadow of an
orbit avoiding the surface, so the certificate is an upper bound on the
length of such paths.  Free diagonal passages connecting two cone
regions through a single wing are a special family: their forcing comes
from the shared corner fiber of the wing pair rather than from the
shading, and they are recorded as certified with an explicit
disposition instead of a plain bold flag.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass, field

from . import curves as cv
from .errors import ClassificationFailure, ConstructionFailure
from .orbifold import CaseTag

# region kinds acting as graph vertices, per construction case
_MAJOR_KINDS = {
    CaseTag.SURFACE_NO_CONE: {"face"},
    CaseTag.SPHERE_ALL_ORDER2: {"face"},
    CaseTag.SPHERE_ALL_BIG: {"face", "B"},
    CaseTag.SPHERE_MIXED: {"face", "B"},
    CaseTag.GENUS_BUTTERFLY: {"face", "Q"},
    CaseTag.GENUS_BUTTERFLY_EXTRA: {"face", "Q"},
    CaseTag.GENUS_MIXED: {"face", "Q"},
}

_CORRIDOR_KINDS = {"T-", "T+", "K", "Kp", "K0", "Kn", "bigon"}

_WALL_SAMPLES = 120
_ARC_SAMPLES = 48
_NUDGE = 1e-6
_POINT_SKIP = 1e-4
_CORNER_NUDGE = 1e-4

_DIAGONAL_DISPOSITION = (
    "free cone-to-cone diagonals through a single wing are certified by "
    "construction: a lift realizing such a diagonal either meets the "
    "shared corner fiber arc of the wing pair or crosses one wing in its "
    "interior"
)


@dataclass(frozen=True)
class DualEdge:
    source: str
    target: str
    bold: bool
    certified: bool = False
    transitions: tuple = ()

    @property
    def counts_bold(self) -> bool:
        return self.bold or self.certified


@dataclass
class DualGraph:
    case: CaseTag
    vertices: list
    edges: list
    corridors: list
    white_faces: list
    dispositions: list = field(default_factory=list)

    def out_edges(self, v):
        return [e for e in self.edges if e.source == v]

    def edge_lookup(self):
        """(source, target) -> list of edges with that endpoint pair."""
        table = {}
        for e in self.edges:
            table.setdefault((e.source, e.target), []).append(e)
        return table


@dataclass(frozen=True)
class _Port:
    """One way in or out of a corridor region."""

    corridor: str
    neighbor: str  # region on the far side of the crossed segment
    segment: tuple  # ("arc", curve, portion) or ("wall", edge_class)


def _portion_index(cur, arc_index, t):
    """Index of the inter-event portion containing a point of the curve."""
    keys = [(ev.arc_index, ev.t) for ev in cur.events]
    if not keys:
        return 0
    return (bisect_right(keys, (arc_index, t)) - 1) % len(keys)


def _near_marked_point(system, z):
    for pt in system.points.values():
        if pt.z is not None and abs(z - pt.z) < _POINT_SKIP:
            return True
    return False


def _classify_or_none(tess, face, z):
    try:
        return tess.classify(face, z)
    except ClassificationFailure:
        return None


def _side_nudges(domain, face, index, t):
    """Point on a side plus its inward nudge."""
    seg = domain.side_segment(face, index)
    z = seg.point_at_fraction(t)
    tan = cv._segment_direction(seg, t)
    w = z + _NUDGE * 1j * tan
    if not domain.faces[face].contains(w, tol=0.0):
        w = z - _NUDGE * 1j * tan
    return z, w


def _wall_crossings(system):
    """Every distinct region pair seen across a wall.

    Yields (from_region, to_region, edge_class, curve, into_white); the
    last two fields describe the rectangle carried by the wall, if any.
    """
    domain = system.domain
    tess = system.tessellation
    seen = set()
    for (face, index), sp in domain.pairings.items():
        for j in range(_WALL_SAMPLES):
            t = (j + 0.5) / _WALL_SAMPLES
            z, w_from = _side_nudges(domain, face, index, t)
            if _near_marked_point(system, z):
                continue
            z2 = sp.glue.apply(z)
            seg2 = domain.side_segment(sp.partner_face, sp.partner_index)
            t2 = cv._fraction_on_segment(seg2, z2)
            _, w_to = _side_nudges(domain, sp.partner_face, sp.partner_index, t2)
            r_from = _classify_or_none(tess, face, w_from)
            r_to = _classify_or_none(tess, sp.partner_face, w_to)
            if r_from is None or r_to is None or r_from == r_to:
                continue
            into_white = (
                sp.wall_curve is not None and sp.partner_face == sp.white_face
            )
            item = (r_from, r_to, sp.edge_class, sp.wall_curve, into_white)
            if item not in seen:
                seen.add(item)
                yield item


def _arc_crossings(system):
    """Every distinct region pair across a portion of a traced curve.

    Yields (right_region, left_region, curve, portion): crossing from the
    right of the oriented curve to its left is the positive direction.
    """
    tess = system.tessellation
    seen = set()
    for cur in system.curves.values():
        if cur.lift_kind != "single":
            continue
        for a_idx, arc in enumerate(cur.arcs):
            seg = arc.seg
            for j in range(_ARC_SAMPLES):
                t = (j + 0.5) / _ARC_SAMPLES
                z = seg.point_at_fraction(t)
                if _near_marked_point(system, z):
                    continue
                tan = cv._segment_direction(seg, t)
                left = _classify_or_none(tess, arc.face, z + _NUDGE * 1j * tan)
                right = _classify_or_none(tess, arc.face, z - _NUDGE * 1j * tan)
                if left is None or right is None or left == right:
                    continue
                item = (right, left, cur.label, _portion_index(cur, a_idx, t))
                if item not in seen:
                    seen.add(item)
                    yield item


def _shading_rank(tess, whites):
    """Coorientation rank of each region: the surface opens from lower
    toward higher rank, so strictly descending transitions are free."""
    ranks = {}
    for region in tess.regions.values():
        if region.kind == "face":
            ranks[region.name] = 2 if region.name[0] in whites else 0
        elif region.kind in ("B", "bigon"):
            # cone region sitting inside the equator band
            ranks[region.name] = 1
        else:
            ranks[region.name] = None  # Q regions and corridors
    return ranks


def _corner_probe(domain, tess, face, vidx):
    poly = domain.faces[face]
    n = poly.n
    z = poly.vertices[vidx]
    prev_v = poly.vertices[(vidx - 1) % n]
    next_v = poly.vertices[(vidx + 1) % n]
    d = (prev_v - z) / abs(prev_v - z) + (next_v - z) / abs(next_v - z)
    w = z + _CORNER_NUDGE * d / abs(d)
    return _classify_or_none(tess, face, w)


def _vertex_diagonals(system, majors):
    """Through-vertex transitions at vertices whose star meets several
    major regions.  The fibers over such vertices are covered by the
    half-fibers of the rectangles ending there, so every passage is
    forced; all resulting edges are bold."""
    domain = system.domain
    tess = system.tessellation
    for cls, star in system.stars.items():
        corner_regions = {}
        for c in star.corners:
            r = _corner_probe(domain, tess, c.face, c.vertex_index)
            if r is None:
                raise ConstructionFailure(
                    f"vertex class {cls}: corner of {c.face} has no region"
                )
            corner_regions[(c.face, c.vertex_index)] = r
        distinct = set(corner_regions.values())
        if len(distinct) == 1:
            # the vertex is interior to a single region; passages through
            # it never change region
            continue
        if not distinct <= majors:
            raise ConstructionFailure(
                f"vertex class {cls} touches non-major regions {distinct}"
            )
        total = star.total
        if total < math.pi + 1e-9:
            # order-two cone: a geodesic through it doubles straight back
            for c in star.corners:
                r = corner_regions[(c.face, c.vertex_index)]
                yield r, r, cls
            continue
        if abs(total - 2 * math.pi) > 1e-9:
            raise ConstructionFailure(
                f"vertex class {cls} with angle {total} is not interior to "
                "a region and is neither regular nor of order two"
            )
        for c in star.corners:
            lo = c.offset + math.pi
            hi = c.offset + c.angle + math.pi
            src = corner_regions[(c.face, c.vertex_index)]
            for c2 in star.corners:
                for shift in (-total, 0.0, total):
                    a = c2.offset + shift
                    b = a + c2.angle
                    if min(hi, b) - max(lo, a) > 1e-9:
                        dst = corner_regions[(c2.face, c2.vertex_index)]
                        yield src, dst, cls
                        break


def build_dual(tess, cx, tag: CaseTag | None = None) -> DualGraph:
    """Assemble the transition graph for an assembled curve system."""
    system = cx.system
    if tag is None:
        tag = cx.tag
    if tag not in _MAJOR_KINDS:
        raise ConstructionFailure(f"no dual graph layout for case {tag}")
    major_kinds = _MAJOR_KINDS[tag]

    majors, corridors = set(), set()
    for region in tess.regions.values():
        if region.kind in major_kinds:
            majors.add(region.name)
        elif region.kind in _CORRIDOR_KINDS:
            corridors.add(region.name)
        else:
            raise ConstructionFailure(
                f"region {region.name} of kind {region.kind} has no dual "
                "vertex and is not a corridor"
            )

    piece_regions = {p.region for p in cx.pieces.values() if p.region}
    for name in corridors:
        if name not in piece_regions:
            raise ConstructionFailure(
                f"corridor region {name} carries no surface piece"
            )

    whites = sorted({
        sp.white_face for sp in system.domain.pairings.values()
        if sp.white_face is not None
    })
    ranks = _shading_rank(tess, set(whites))
    region_kind = {r.name: r.kind for r in tess.regions.values()}

    def free(src, dst):
        ru, rv = ranks[src], ranks[dst]
        return ru is not None and rv is not None and ru > rv

    raw = {}  # (src, dst, bold, certified) -> transition descriptions

    def add(src, dst, bold, desc, certified=False):
        raw.setdefault((src, dst, bold, certified), set()).add(desc)

    ports = {name: [] for name in corridors}

    for r_from, r_to, cls, curve, into_white in _wall_crossings(system):
        if r_from in majors and r_to in majors:
            if curve is None:
                raise ConstructionFailure(
                    f"wall {cls} separates major regions {r_from}|{r_to} "
                    "without a rectangle"
                )
            if into_white != (not free(r_from, r_to)):
                raise ConstructionFailure(
                    f"wall {cls}: rectangle coorientation disagrees with "
                    f"the shading of {r_from}|{r_to}"
                )
            add(r_from, r_to, into_white, f"{r_from}-{cls}->{r_to}")
        elif r_from in corridors and r_to in corridors:
            raise ConstructionFailure(
                f"wall {cls} joins two corridors {r_from}|{r_to}; corridor "
                "chains are not expected in any covered case"
            )
        elif r_to in corridors:
            ports[r_to].append(_Port(r_to, r_from, ("wall", cls)))
        # the reversed crossing is produced by the partner pairing entry

    for right, left, curve, portion in _arc_crossings(system):
        seg_id = ("arc", curve, portion)
        if left in majors and right in majors:
            raise ConstructionFailure(
                f"curve {curve} separates two major regions "
                f"({right}|{left}) without a rectangle"
            )
        if left in corridors and right in corridors:
            raise ConstructionFailure(
                f"curve {curve} joins two corridors {right}|{left}; "
                "corridor chains are not expected in any covered case"
            )
        if left in corridors:
            ports[left].append(_Port(left, right, seg_id))
        if right in corridors:
            ports[right].append(_Port(right, left, seg_id))

    for name in sorted(corridors):
        plist = ports[name]
        if not plist:
            raise ConstructionFailure(f"corridor {name} has no ports")
        for p_in in plist:
            for p_out in plist:
                src, dst = p_in.neighbor, p_out.neighbor
                certified = (
                    region_kind[name] in ("K", "Kp")
                    and region_kind[src] == "Q"
                    and region_kind[dst] == "Q"
                )
                bold = not certified and not free(src, dst)
                desc = (
                    f"{src}-[{name}:{p_in.segment[1:]}"
                    f"|{p_out.segment[1:]}]->{dst}"
                )
                add(src, dst, bold, desc, certified)

    for src, dst, cls in _vertex_diagonals(system, majors):
        add(src, dst, True, f"{src}-vertex:{cls}->{dst}")

    edges = [
        DualEdge(src, dst, bold, certified, tuple(sorted(descs)))
        for (src, dst, bold, certified), descs in sorted(raw.items())
    ]
    dispositions = []
    if any(e.certified for e in edges):
        dispositions.append(_DIAGONAL_DISPOSITION)
    return DualGraph(tag, sorted(majors), edges, sorted(corridors),
                     whites, dispositions)


def max_boldfree_path(graph: DualGraph):
    """Longest directed path using only non-bold, non-certified edges.

    Returns math.inf when the bold-free subgraph contains a cycle.
    """
    adj = {}
    for e in graph.edges:
        if not e.counts_bold:
            adj.setdefault(e.source, set()).add(e.target)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {}
    depth = {}

    def visit(v):
        color[v] = GRAY
        best = 0
        for w in adj.get(v, ()):
            state = color.get(w, WHITE)
            if state == GRAY:
                raise _CycleFound
            if state == WHITE:
                visit(w)
            best = max(best, 1 + depth[w])
        color[v] = BLACK
        depth[v] = best

    try:
        for v in graph.vertices:
            if color.get(v, WHITE) == WHITE:
                visit(v)
    except _CycleFound:
        return math.inf
    return max(depth.values(), default=0)


class _CycleFound(Exception):
    pass
