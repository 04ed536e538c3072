import random

import pytest

from colorembed.bootstrap import (
    carve_regions,
    embed_expansion_joined,
    embed_rooted_forest_anchored,
    embed_star_forest,
    embed_subdivision_joined,
    embed_subdivision_jumbled,
    find_blocker,
    jumbled_s,
    min_mono_degree_vertex,
    regions_for,
)
from colorembed.certify import JumbledParams
from colorembed.engine import EngineConfig, GoodnessParams, new_embedding, revalidate, verify_good
from colorembed.errors import JoinednessViolation, PreconditionError, TargetError
from colorembed.graphs import Graph, GraphFamily, external_family_neighborhood
from colorembed.targets import (
    PathPattern,
    RootedColoredGraph,
    build_expansion,
    build_star_forest,
    build_subdivision,
    expansion_layout,
)

BIG_CAP = 10**12


def K(n, t=1):
    return GraphFamily(tuple(Graph.complete(n) for _ in range(t)))


def clique_plus_isolated(m):
    edges = [(u, v) for u in range(m) for v in range(u + 1, m)]
    return GraphFamily((Graph.from_edges(m + 1, edges),))


# --- carving -------------------------------------------------------------------

def test_blocker_empty_in_complete_graph():
    assert find_blocker(K(20), range(13), GoodnessParams(1, 3)) == []


def test_blocker_absorbs_isolated_vertex():
    # s = 3, D = 3 needs |Y0| >= 39; the isolated vertex has no neighbors at all
    F = clique_plus_isolated(45)
    U0 = find_blocker(F, range(39), GoodnessParams(3, 3))
    assert (45, 1) in U0 and len(U0) <= 3
    assert len(external_family_neighborhood(F, U0, range(39))) < 3 * len(U0)


def test_blocker_reports_non_joined_host():
    F = GraphFamily((Graph.empty(20),))
    with pytest.raises(JoinednessViolation):
        find_blocker(F, range(7), GoodnessParams(1, 1))


def test_blocker_needs_large_y0():
    with pytest.raises(PreconditionError):
        find_blocker(K(20), range(5), GoodnessParams(1, 3))


def test_carve_complete_graph():
    regions = carve_regions(K(30), GoodnessParams(1, 3))
    assert len(regions.W) >= 30 - 14
    assert regions.blocker == [] and len(regions.Y0) == 13
    regions.check(30, 1, 3)


def test_carved_placement_is_good():
    regions = carve_regions(K(30), GoodnessParams(1, 3))
    rng = random.Random(5)
    e = new_embedding(K(30), GoodnessParams(1, 3), universe=regions.V_prime)
    for h, v in enumerate(rng.sample(regions.W, 5)):
        e.target.add_vertex(h)
        e.place(h, v)
    assert verify_good(e, bound=2).passed


def test_carve_rejects_tiny_host():
    with pytest.raises(PreconditionError):
        carve_regions(K(2), GoodnessParams(3, 3))


def test_regions_fall_back_only_when_uncertified():
    F = K(10)
    regions = regions_for(F, GoodnessParams(2, 3), EngineConfig())
    assert regions.W == list(range(10)) and regions.notes
    with pytest.raises(PreconditionError):
        regions_for(F, GoodnessParams(2, 3), EngineConfig(certified=True))


# --- jumbled helpers -----------------------------------------------------------

def test_min_mono_degree_examples():
    assert min_mono_degree_vertex(K(4), 0.5, JumbledParams(0.75, 1.0)) == 0
    assert min_mono_degree_vertex(K(6, 2), 0.5, JumbledParams(5 / 6, 1.0)) == 0


@pytest.mark.parametrize("n,d", [(10, 3), (12, 5), (16, 4)])
def test_min_mono_degree_closed_form_on_regular_graphs(n, d):
    # circulant d-regular graph (d even) or its complement-free variant
    steps = range(1, d // 2 + 1)
    edges = {tuple(sorted((v, (v + k) % n))) for v in range(n) for k in steps}
    if d % 2:
        edges |= {tuple(sorted((v, v + n // 2))) for v in range(n // 2)}
    G = Graph.from_edges(n, edges)
    assert set(G.degrees()) == {d}
    params = JumbledParams(0.5, 1.0)
    for c in (0.1, 0.3, 0.6, 0.9):
        ok = d >= (1 - c) * params.p * n
        if ok:
            assert min_mono_degree_vertex(GraphFamily((G,)), c, params, check=False) == 0
        else:
            with pytest.raises(PreconditionError):
                min_mono_degree_vertex(GraphFamily((G,)), c, params, check=False)


def test_jumbled_s():
    assert jumbled_s(K(9), JumbledParams(4 / 9, 2.0)) == 9
    assert jumbled_s(K(9, 4), JumbledParams(0.5, 1.0)) == 8


def test_star_forest_embedding():
    n = 60
    params = JumbledParams((n - 1) / n, 1.0)
    forest = build_star_forest([3])
    regions, e = embed_star_forest(K(n), forest, 0.7, params, D=3, config=EngineConfig(), s=1)
    assert e.target.edge_set() == forest.edge_set()
    assert not revalidate(e)
    assert verify_good(e, bound=2).passed


def test_star_forest_too_large():
    with pytest.raises(PreconditionError):
        embed_star_forest(K(30), build_star_forest([3, 3, 3]), 0.5, JumbledParams(29 / 30, 1.0), s=1)


def test_empty_star_forest():
    regions, e = embed_star_forest(K(60), RootedColoredGraph(), 0.7, JumbledParams(59 / 60, 1.0), s=1)
    assert len(e.target) == 0 and verify_good(e, bound=2).passed


# --- joined pipelines ----------------------------------------------------------

def test_anchored_forest_with_prescribed_anchors():
    bt = build_subdivision(3, 3)
    anchors = {0: 20, 1: 25, 2: 29}
    regions, e = embed_rooted_forest_anchored(K(30), bt.graph, bt.decomposition, anchors, GoodnessParams(1, 3))
    assert all(e.map[h] == v for h, v in anchors.items())
    assert e.target.edge_set() == bt.graph.edge_set()
    assert verify_good(e).passed


def test_anchor_errors():
    bt = build_subdivision(3, 3)
    regions = carve_regions(K(30), GoodnessParams(1, 3))
    outside = regions.Y0[0]
    with pytest.raises(PreconditionError, match="outside W"):
        embed_rooted_forest_anchored(
            K(30), bt.graph, bt.decomposition, {0: outside, 1: 25, 2: 29}, GoodnessParams(1, 3), regions=regions
        )
    with pytest.raises(PreconditionError, match="distinct"):
        embed_rooted_forest_anchored(K(30), bt.graph, bt.decomposition, {0: 20, 1: 20, 2: 29}, GoodnessParams(1, 3))


def test_subdivision_joined_k30():
    bt = build_subdivision(3, 3)
    cfg = EngineConfig(milestones=True)
    regions, e = embed_subdivision_joined(K(30), bt, GoodnessParams(1, 3), cfg)
    assert e.target.edge_set() == bt.graph.edge_set()
    assert not revalidate(e) and verify_good(e).passed
    labels = [st["label"] for st in e.steps if st["op"] == "milestone"]
    assert labels == ["anchors", "path 0", "path 1", "path 2"]


def test_subdivision_certified_preconditions():
    cfg = EngineConfig(certified=True)
    with pytest.raises(PreconditionError, match="required_path_length"):
        embed_subdivision_joined(K(30), build_subdivision(3, 3), GoodnessParams(2, 3), cfg)
    with pytest.raises(PreconditionError, match="n - 6sD"):
        embed_subdivision_joined(K(40), build_subdivision(3, 5), GoodnessParams(2, 3), cfg)


def test_subdivision_certified_two_joined():
    # K_n is 2-joined; s = 2 needs paths of length 5 and n >= |V(H)| + 36
    bt = build_subdivision(3, 5, PathPattern([1, 1, 1, 1, 1]))
    cfg = EngineConfig(certified=True, milestones=True)
    regions, e = embed_subdivision_joined(K(52), bt, GoodnessParams(2, 3), cfg)
    assert e.target.edge_set() == bt.graph.edge_set()
    assert verify_good(e, cap=BIG_CAP).passed
    connects = [st for st in e.steps if st["op"] == "connect"]
    assert all(st["height"] == 1 for st in connects)


def test_subdivision_certified_two_colors():
    # both members complete, so the family is 2-joined; alternating colors on every path
    pattern = PathPattern([1, 2, 1, 2, 1])
    bt = build_subdivision(3, 5, {pair: pattern for pair in [(0, 1), (0, 2), (1, 2)]})
    cfg = EngineConfig(certified=True, milestones=True)
    regions, e = embed_subdivision_joined(K(52, 2), bt, GoodnessParams(2, 3), cfg)
    assert e.target.edge_set() == bt.graph.edge_set() and not revalidate(e)
    assert verify_good(e, bound=4, cap=BIG_CAP).passed


def test_expansion_joined_k40():
    trees, specs = expansion_layout(3, [2, 2, 2], 3)
    bt = build_expansion(trees, specs)
    regions, e = embed_expansion_joined(K(40), bt, GoodnessParams(1, 3), EngineConfig(milestones=True))
    assert e.target.edge_set() == bt.graph.edge_set()
    assert verify_good(e).passed


def test_expansion_mono_degree_violation():
    star = ([0, 1, 2, 3, 4], [(0, 1, 1), (0, 2, 1), (0, 3, 1), (0, 4, 1)])
    trees = [star, ([10, 11], [(10, 11, 1)]), ([20, 21], [(20, 21, 1)])]
    specs = {(0, 1): ((1, 30, 10), [1, 1]), (0, 2): ((2, 31, 20), [1, 1]), (1, 2): ((11, 32, 21), [1, 1])}
    bt = build_expansion(trees, specs)
    with pytest.raises(PreconditionError, match="mono degree"):
        embed_expansion_joined(K(40), bt, GoodnessParams(1, 3))


def test_expansion_bad_endpoints():
    trees, specs = expansion_layout(3, [2, 2, 2], 3)
    seq, pat = specs[(0, 1)]
    specs[(0, 1)] = ((seq[0], seq[1], seq[2], 99), pat)
    with pytest.raises(TargetError):
        build_expansion(trees, specs)


# --- jumbled pipeline ----------------------------------------------------------

def test_jumbled_toy_complete_host():
    n = 140
    bt = build_subdivision(3, 9)
    regions, e = embed_subdivision_jumbled(K(n), bt, 0.9, JumbledParams((n - 1) / n, 1.0), D=3)
    assert e.target.edge_set() == bt.graph.edge_set()
    assert not revalidate(e)
    assert verify_good(e, cap=BIG_CAP).passed


def test_jumbled_preconditions():
    params = JumbledParams(139 / 140, 1.0)
    with pytest.raises(PreconditionError, match="8/ell"):
        embed_subdivision_jumbled(K(140), build_subdivision(3, 9), 0.5, params)
    wide = build_subdivision(4, 9)
    with pytest.raises(PreconditionError, match="Delta"):
        embed_subdivision_jumbled(K(140), wide, 0.99, params)
