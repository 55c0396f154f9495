"""Empirical verification that traced geodesics keep meeting the surface.

Crossings are detected combinatorially: a traced geodesic yields a
sequence of tessellation regions, the sequence maps to a directed path
in the transition graph, and the bold (or certified) edges along that
path are the forced surface crossings.  A healthy construction makes
every sufficiently long geodesic produce at least one forced crossing,
with bounded arc length between consecutive ones.
"""

import math
import random
from dataclasses import dataclass, field

from . import hypgeo as hg
from .errors import (
    ConstructionFailure,
    MappingFailure,
    NearSingular,
    SamplingFailure,
)

_RESAMPLE_BUDGET_FACTOR = 10
_MIN_MULTIPLIER = 2.0


@dataclass(frozen=True)
class SampleConfig:
    count: int = 1000
    length_multiplier: float = 4.0
    seed: int = 0
    eps_cone: float = 1e-7
    eps_vertexband: float = 1e-7
    grid_directions: int = 0  # extra deterministic fan per face barycenter

    def validate(self):
        if self.count < 1:
            raise ValueError("sample count must be at least 1")
        if self.length_multiplier < _MIN_MULTIPLIER:
            raise ValueError(
                "length multiplier below the bounded-return regime "
                f"(needs at least {_MIN_MULTIPLIER})"
            )


@dataclass
class FlowReport:
    samples: int
    rejected_near_singular: int
    min_crossings: int
    max_boldfree_arc_length: float
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class PathStep:
    s: float  # arc length of the transition along the geodesic
    source: str
    target: str
    bold: bool  # counts as a forced crossing (bold or certified)


@dataclass
class DualPath:
    length: float
    steps: list

    def bold_positions(self):
        return [st.s for st in self.steps if st.bold]

    def max_boldfree_arc(self) -> float:
        marks = [0.0] + self.bold_positions() + [self.length]
        return max(b - a for a, b in zip(marks, marks[1:]))


def _arc_parameter(trace):
    """Arc-length coordinate along the traced geodesic, matching the
    parameterization used for visit boundaries."""
    T = hg.map_to_real_axis(trace.geodesic)
    Tinv = T.inverse()
    s0 = 2.0 * math.atanh(T.apply(trace.start).real)

    def s_of(p) -> float:
        x = min(1.0 - 1e-16, max(-1.0 + 1e-16, T.apply(p).real))
        return 2.0 * math.atanh(x) - s0

    def point_at(s) -> complex:
        return Tinv.apply(math.tanh((s + s0) / 2.0))

    return s_of, point_at


def region_sequence(trace, tess):
    """(region, s_in, s_out) visits along a trace, exact at chord and
    wall crossings, with consecutive equal regions merged."""
    s_of, point_at = _arc_parameter(trace)
    out = []
    for visit in trace.visits:
        inv = visit.place.inverse()
        local = hg.Geodesic(
            inv.apply_boundary(trace.geodesic.theta1),
            inv.apply_boundary(trace.geodesic.theta2),
        )
        cuts = [visit.s_in, visit.s_out]
        for _, seg in tess.chords_by_face.get(visit.face, ()):
            x = hg.intersect(local, seg.carrier)
            if x is None or not seg.contains(x, tol=1e-9):
                continue
            s = s_of(visit.place.apply(x))
            if visit.s_in + 1e-12 < s < visit.s_out - 1e-12:
                cuts.append(s)
        cuts.sort()
        for a, b in zip(cuts, cuts[1:]):
            if b - a < 1e-12:
                continue
            z_local = inv.apply(point_at((a + b) / 2.0))
            region = tess.classify(visit.face, z_local)
            if out and out[-1][0] == region:
                out[-1] = (region, out[-1][1], b)
            else:
                out.append((region, a, b))
    return out


def trace_to_dualpath(trace, tess, graph) -> DualPath:
    """Map a traced geodesic to its path in the transition graph.

    Corridor visits are folded into the passage they realize; the bold
    flag of each step is the forced-crossing flag of the matching edge.
    """
    majors = set(graph.vertices)
    lookup = graph.edge_lookup()
    visits = [v for v in region_sequence(trace, tess)]

    # drop leading/trailing corridor time: no full passage is realized
    while visits and visits[0][0] not in majors:
        visits.pop(0)
    while visits and visits[-1][0] not in majors:
        visits.pop()

    steps = []
    i = 0
    while i + 1 < len(visits):
        src, _, s_leave = visits[i]
        j = i + 1
        while j < len(visits) and visits[j][0] not in majors:
            if j > i + 1:
                raise MappingFailure(
                    "trace chains corridors "
                    f"{visits[j - 1][0]}|{visits[j][0]} with no major "
                    "region between them"
                )
            j += 1
        dst = visits[j][0]
        edges = lookup.get((src, dst))
        if not edges:
            raise MappingFailure(
                f"transition {src} -> {dst} has no edge in the "
                "transition graph"
            )
        # a pair served by both free and forced mechanisms (for example
        # a free wall crossing and a forced through-vertex diagonal) is
        # conservatively counted as free: traces passing near a vertex
        # are rejected, so the realized mechanism is the generic one
        bold = all(e.counts_bold for e in edges)
        steps.append(PathStep(s_leave, src, dst, bold))
        i = j
    return DualPath(trace.length, steps)


def _face_sampler(domain):
    """Rejection sampler for the hyperbolic-area measure on the faces."""
    faces = list(domain.faces.items())
    areas = [poly.area_gauss_bonnet() for _, poly in faces]
    total = sum(areas)
    radii = [max(abs(v) for v in poly.vertices) for _, poly in faces]

    def draw(rng):
        x = rng.random() * total
        for (name, poly), area, rmax in zip(faces, areas, radii):
            if x <= area:
                break
            x -= area
        dens_max = 4.0 / (1.0 - rmax * rmax) ** 2
        while True:
            z = complex(rng.uniform(-rmax, rmax), rng.uniform(-rmax, rmax))
            if abs(z) >= rmax or not poly.contains(z, tol=-1e-9):
                continue
            dens = 4.0 / (1.0 - abs(z) ** 2) ** 2
            if rng.random() * dens_max <= dens:
                return name, z

    return draw


def _barycenter(poly):
    c = sum(poly.vertices) / poly.n
    return c


def _grid_items(domain, k):
    items = []
    for name, poly in sorted(domain.faces.items()):
        z = _barycenter(poly)
        for j in range(k):
            theta = 2.0 * math.pi * (j + 0.37) / k
            items.append((name, z, theta))
    return items


def sample_flow(domain, tess, graph, cfg: SampleConfig) -> FlowReport:
    """Trace random geodesics and verify forced crossings appear.

    Deterministic for a fixed configuration: each work item derives its
    own generator from the seed and its index, so aggregation does not
    depend on ordering.
    """
    from .orbifold import trace_geodesic

    cfg.validate()
    if domain.combinatorial_only:
        raise SamplingFailure(
            "domain has no metric realization; the transition-graph "
            "certificate is the only bounded-return evidence"
        )

    draw = _face_sampler(domain)
    length = cfg.length_multiplier * domain.diameter
    budget = _RESAMPLE_BUDGET_FACTOR * cfg.count
    rejected = 0
    min_crossings = None
    max_gap = 0.0
    failures = []

    work = [("random", i, None) for i in range(cfg.count)]
    if cfg.grid_directions:
        work += [("grid", i, item) for i, item
                 in enumerate(_grid_items(domain, cfg.grid_directions))]

    for mode, index, item in work:
        stream = index if mode == "random" else (1 << 48) + index
        rng = random.Random((cfg.seed << 52) ^ stream)
        attempt = 0
        while True:
            if mode == "random" or attempt > 0:
                face, z = draw(rng)
                theta = rng.uniform(0.0, 2.0 * math.pi)
            else:
                face, z, theta = item
            try:
                trace = trace_geodesic(
                    domain, z, theta, length, start_face=face,
                    eps_vertex=cfg.eps_cone,
                )
                break
            except NearSingular:
                rejected += 1
                attempt += 1
                if rejected > budget:
                    raise SamplingFailure(
                        "near-singular resampling budget exhausted"
                    )
        path = trace_to_dualpath(trace, tess, graph)
        crossings = len(path.bold_positions())
        gap = path.max_boldfree_arc()
        min_crossings = (crossings if min_crossings is None
                         else min(min_crossings, crossings))
        max_gap = max(max_gap, gap)
        if crossings < 1:
            failures.append(
                f"{mode} sample {index}: geodesic of length {length:.4f} "
                f"from {face} at {z:.6f} direction {theta:.6f} produced "
                "no forced crossing"
            )
    return FlowReport(len(work), rejected, min_crossings or 0,
                      max_gap, failures)
