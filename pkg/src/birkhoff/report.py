"""Machine-readable run reports for the construction pipeline.

A RunReport collects everything one verification run establishes about
one orbifold type: the construction case, exact surface invariants, the
transition-graph certificate, and (when the domain has a metric
realization) the geodesic-sampling evidence.  Reports serialize to JSON
and parse back losslessly.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import cellcomplex as cc
from . import curves as cv
from . import dualgraph as dg
from . import flowcheck as fc
from . import orbifold as ob

SCHEMA_VERSION = 1

_BOLDFREE_LIMIT = 2


def _frac(x: Fraction) -> str:
    return str(x)


@dataclass
class RunReport:
    schema_version: int
    type: str
    case: str
    domain: dict  # diameter, area, faces, combinatorial_only
    curves: dict  # counts per kind, total length (when realized)
    surface: dict  # chi, boundary components, genus, self-linkings
    certificate: dict  # transition-graph summary and bold-free bound
    flow: dict  # flow report fields, or a skip reason
    verdict: str  # "pass" | "fail"

    def to_json(self, indent=2) -> str:
        return json.dumps(asdict(self), indent=indent, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunReport":
        return RunReport(**json.loads(text))


def _domain_stats(dom) -> dict:
    faces = {}
    for name, poly in sorted(dom.faces.items()):
        faces[name] = {
            "sides": poly.n,
            "area": poly.area_gauss_bonnet(),
        }
    return {
        "diameter": dom.diameter,
        "area": sum(f["area"] for f in faces.values()),
        "faces": faces,
        "combinatorial_only": dom.combinatorial_only,
    }


def _curve_stats(system) -> dict:
    kinds = {}
    for cur in system.curves.values():
        kinds[cur.kind] = kinds.get(cur.kind, 0) + 1
    return {
        "count": len(system.curves),
        "kinds": dict(sorted(kinds.items())),
        "marked_points": len(system.points),
        "regions": len(system.tessellation.regions),
    }


def _surface_stats(rep: cc.GenusReport) -> dict:
    return {
        "chi": rep.chi_cell_count,
        "chi_fractional": _frac(rep.chi_fractional),
        "chi_cross_check": rep.chi_fractional == Fraction(rep.chi_cell_count),
        "boundary_components": rep.boundary_components,
        "genus": rep.genus,
        "self_linking": {k: _frac(v) for k, v
                         in sorted(rep.per_orbit_self_linking.items())},
        "piece_contributions": {k: _frac(v) for k, v
                                in sorted(rep.per_piece_contributions.items())},
    }


def _certificate_stats(graph: dg.DualGraph) -> dict:
    bound = dg.max_boldfree_path(graph)
    return {
        "vertices": len(graph.vertices),
        "edges": len(graph.edges),
        "bold_edges": sum(1 for e in graph.edges if e.bold),
        "certified_edges": sum(1 for e in graph.edges if e.certified),
        "free_edges": sum(1 for e in graph.edges if not e.counts_bold),
        "max_boldfree_path": "inf" if bound is math.inf else bound,
        "dispositions": list(graph.dispositions),
    }


def _flow_stats(report: fc.FlowReport | None, skip_reason: str | None) -> dict:
    if report is None:
        return {"skipped": True, "reason": skip_reason or "not requested"}
    return {
        "skipped": False,
        "samples": report.samples,
        "rejected_near_singular": report.rejected_near_singular,
        "min_crossings": report.min_crossings,
        "max_boldfree_arc_length": report.max_boldfree_arc_length,
        "failures": list(report.failures),
    }


def _verdict(surface: dict, certificate: dict, flow: dict) -> str:
    ok = (
        surface["genus"] == 1
        and all(v == "-1" for v in surface["self_linking"].values())
        and surface["chi_cross_check"]
        and certificate["max_boldfree_path"] != "inf"
        and certificate["max_boldfree_path"] <= _BOLDFREE_LIMIT
        and (flow["skipped"] or not flow["failures"])
    )
    return "pass" if ok else "fail"


def run_pipeline(type_text: str,
                 flow_cfg: fc.SampleConfig | None = None) -> RunReport:
    """Build one orbifold type end to end and verify everything.

    Raises the typed error of the first failing stage; callers map the
    error code to an exit status.
    """
    otype = ob.OrbifoldType.parse(type_text)
    dom = ob.build_domain(otype)
    system = cv.build_system(dom)
    cx = cc.assemble(system)
    cc.verify_gluing(cx)
    genus_rep = cc.genus_report(cx)
    graph = dg.build_dual(system.tessellation, cx)

    flow_rep, skip = None, None
    if flow_cfg is None:
        skip = "not requested"
    elif dom.combinatorial_only:
        skip = (
            "domain is combinatorial-only; the transition-graph "
            "certificate is the bounded-return evidence"
        )
    else:
        flow_rep = fc.sample_flow(dom, system.tessellation, graph, flow_cfg)

    surface = _surface_stats(genus_rep)
    certificate = _certificate_stats(graph)
    flow = _flow_stats(flow_rep, skip)
    return RunReport(
        schema_version=SCHEMA_VERSION,
        type=str(otype),
        case=dom.case.name,
        domain=_domain_stats(dom),
        curves=_curve_stats(system),
        surface=surface,
        certificate=certificate,
        flow=flow,
        verdict=_verdict(surface, certificate, flow),
    )
