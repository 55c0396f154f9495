import math

import pytest

from birkhoff import cellcomplex as cc
from birkhoff import curves as cv
from birkhoff import dualgraph as dg
from birkhoff import flowcheck as fc
from birkhoff import orbifold as ob
from birkhoff.errors import MappingFailure, SamplingFailure


def pipeline(text):
    dom = ob.build_domain(ob.OrbifoldType.parse(text))
    cx = cc.assemble(cv.build_system(dom))
    graph = dg.build_dual(cx.system.tessellation, cx)
    return dom, cx.system.tessellation, graph


def test_config_validation():
    with pytest.raises(ValueError):
        fc.SampleConfig(count=0).validate()
    with pytest.raises(ValueError):
        fc.SampleConfig(length_multiplier=1.5).validate()
    fc.SampleConfig(count=1, length_multiplier=2.0).validate()


def test_combinatorial_domain_is_refused():
    dom, tess, graph = pipeline("2;3,3,3,3")
    assert dom.combinatorial_only
    with pytest.raises(SamplingFailure):
        fc.sample_flow(dom, tess, graph, fc.SampleConfig(count=1))


def test_short_run_crosses_and_is_deterministic():
    dom, tess, graph = pipeline("2;")
    cfg = fc.SampleConfig(count=20, seed=7)
    rep1 = fc.sample_flow(dom, tess, graph, cfg)
    rep2 = fc.sample_flow(dom, tess, graph, cfg)
    assert rep1 == rep2
    assert rep1.samples == 20
    assert rep1.min_crossings >= 1
    assert rep1.failures == []
    assert rep1.passed
    assert rep1.max_boldfree_arc_length <= 3 * dom.diameter


def test_seed_changes_the_run():
    dom, tess, graph = pipeline("0;2,2,2,2,2")
    r0 = fc.sample_flow(dom, tess, graph, fc.SampleConfig(count=10, seed=0))
    r1 = fc.sample_flow(dom, tess, graph, fc.SampleConfig(count=10, seed=1))
    assert r0.max_boldfree_arc_length != r1.max_boldfree_arc_length


def test_grid_directions_extend_the_sample_set():
    dom, tess, graph = pipeline("0;2,2,2,2,2")
    cfg = fc.SampleConfig(count=5, grid_directions=8)
    rep = fc.sample_flow(dom, tess, graph, cfg)
    assert rep.samples == 5 + 8 * len(dom.faces)
    assert rep.failures == []


def test_dualpath_of_an_explicit_trace():
    dom, tess, graph = pipeline("2;")
    z = sum(dom.faces[dom.base_face].vertices) / dom.faces[dom.base_face].n
    trace = ob.trace_geodesic(dom, z, 0.35, 4 * dom.diameter,
                              start_face=dom.base_face)
    path = fc.trace_to_dualpath(trace, tess, graph)
    assert path.steps, "a long geodesic visits several regions"
    lookup = graph.edge_lookup()
    for st in path.steps:
        assert (st.source, st.target) in lookup
    assert path.bold_positions() == sorted(path.bold_positions())
    assert len(path.bold_positions()) >= 1
    assert path.max_boldfree_arc() <= path.length


def test_single_region_trace_maps_to_empty_path():
    dom, tess, graph = pipeline("2;")
    z = sum(dom.faces[dom.base_face].vertices) / dom.faces[dom.base_face].n
    trace = ob.trace_geodesic(dom, z, 0.35, 1e-3, start_face=dom.base_face)
    path = fc.trace_to_dualpath(trace, tess, graph)
    assert path.steps == []
    assert path.max_boldfree_arc() == pytest.approx(1e-3)


def test_unrecognized_adjacency_is_a_mapping_failure():
    dom, tess, graph = pipeline("2;")
    z = sum(dom.faces[dom.base_face].vertices) / dom.faces[dom.base_face].n
    trace = ob.trace_geodesic(dom, z, 0.35, 2 * dom.diameter,
                              start_face=dom.base_face)
    hollow = dg.DualGraph(graph.case, graph.vertices, [], [], [])
    with pytest.raises(MappingFailure):
        fc.trace_to_dualpath(trace, tess, hollow)


def test_region_sequence_is_gapless():
    dom, tess, graph = pipeline("0;3,3,3,3")
    z = sum(dom.faces["E"].vertices) / dom.faces["E"].n
    trace = ob.trace_geodesic(dom, z, 1.0, 3 * dom.diameter,
                              start_face="E")
    seq = fc.region_sequence(trace, tess)
    assert seq[0][1] == pytest.approx(0.0)
    assert seq[-1][2] == pytest.approx(trace.length)
    for (r1, _, b), (r2, a, _) in zip(seq, seq[1:]):
        assert r1 != r2
        assert a == pytest.approx(b)
    # corridor regions appear and always separate major regions
    kinds = {name: tess.regions[name].kind for name in tess.regions}
    assert any(kinds[r].startswith("T") for r, _, _ in seq)


METRIC_CASES = ["2;", "0;2,2,2,2,2", "0;3,3,3,3", "0;2,2,3,3,3",
                "2;3,3,3", "2;5"]


@pytest.mark.parametrize("text", METRIC_CASES)
def test_every_metric_case_samples_clean(text):
    dom, tess, graph = pipeline(text)
    rep = fc.sample_flow(dom, tess, graph,
                         fc.SampleConfig(count=40, seed=0))
    assert rep.failures == []
    assert rep.min_crossings >= 1
    assert rep.rejected_near_singular <= rep.samples // 10
    assert rep.max_boldfree_arc_length <= 3 * dom.diameter
