import json

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from colorembed.errors import TargetError
from colorembed.targets import (
    PathConstructibleDecomposition,
    PathPattern,
    RootedColoredGraph,
    build_expansion,
    build_star_forest,
    build_subdivision,
    built_from_dict,
    built_to_dict,
    expansion_layout,
    load_target,
    make_pattern,
    mono_max_degree,
    required_path_length,
    save_target,
    star_forest_of,
    tree_height,
    validate_path_constructible,
)


def colored(n, edges):
    H = RootedColoredGraph()
    for v in range(n):
        H.add_vertex(v)
    for u, v, c in edges:
        H.add_edge(u, v, c)
    return H


def test_mono_max_degree_examples():
    assert mono_max_degree(colored(3, [(0, 1, 1), (1, 2, 2), (0, 2, 3)])) == 1
    assert mono_max_degree(colored(6, [(0, i, 1) for i in range(1, 6)])) == 5
    assert mono_max_degree(colored(4, [(0, 1, 1), (1, 2, 1), (2, 3, 2)])) == 2


@pytest.mark.parametrize("s,D,ell", [(1, 3, 3), (1, 7, 3), (4, 3, 7), (5, 3, 9), (9, 4, 7), (10, 4, 9)])
def test_required_path_length_examples(s, D, ell):
    assert required_path_length(s, D) == ell


@given(st.integers(1, 10**6), st.integers(3, 40))
def test_tree_height_is_the_least_covering_power(s, D):
    k = tree_height(s, D)
    assert (D - 1) ** k >= s
    assert k == 0 or (D - 1) ** (k - 1) < s


def test_tree_height_rejects_small_D():
    with pytest.raises(TargetError):
        tree_height(3, 2)


def test_subdivision_counts():
    bt = build_subdivision(3, 3)
    assert len(bt.graph) == 9 and len(bt.graph.edges()) == 9
    for ell in (1, 2, 4):
        assert len(build_subdivision(4, ell).graph) == 4 + 6 * (ell - 1)
    bt = build_subdivision(3, 5, PathPattern([1, 2, 1, 2, 1]))
    assert mono_max_degree(bt.graph) == 2
    assert validate_path_constructible(bt.graph, bt.decomposition)


@given(st.integers(3, 6), st.integers(1, 6))
def test_subdivision_is_homeomorphic_to_clique(D, ell):
    bt = build_subdivision(D, ell)
    G = nx.Graph([(u, v) for u, v, _ in bt.graph.edges()])
    G.add_nodes_from(bt.graph.vertices)
    # suppress degree-2 interior vertices
    for v in list(G.nodes):
        if v >= D and G.degree(v) == 2:
            a, b = G.neighbors(v)
            G.remove_node(v)
            G.add_edge(a, b)
    assert nx.is_isomorphic(G, nx.complete_graph(D))
    bt.graph.validate()


def test_subdivision_pattern_mismatch():
    with pytest.raises(TargetError):
        build_subdivision(3, 4, PathPattern([1, 2]))


def test_expansion_examples():
    trees, specs = expansion_layout(3, [1, 1, 1], 3)
    exp = build_expansion(trees, specs)
    sub = build_subdivision(3, 3)
    assert exp.graph.edge_set() == sub.graph.edge_set()

    trees, specs = expansion_layout(3, [2, 2, 2], 3)
    bt = build_expansion(trees, specs)
    assert len(bt.graph) == 6 + 3 * 2
    assert validate_path_constructible(bt.graph, bt.decomposition)


def test_expansion_clause_five():
    trees, specs = expansion_layout(3, [2, 2, 2], 3)
    seq, pat = specs[(0, 1)]
    # route the first path through a vertex of the third branch
    specs[(0, 1)] = ((seq[0], trees[2][0][1], seq[2], seq[3]), pat)
    with pytest.raises(TargetError) as exc:
        build_expansion(trees, specs)
    assert exc.value.clause == "(5)"


def test_expansion_other_clauses():
    trees, specs = expansion_layout(3, [2, 2, 2], 3)
    bad = dict(specs)
    del bad[(0, 2)]
    with pytest.raises(TargetError) as exc:
        build_expansion(trees, bad)
    assert exc.value.clause == "(6)"
    broken = [(trees[0][0], [])] + trees[1:]
    with pytest.raises(TargetError) as exc:
        build_expansion(broken, specs)
    assert exc.value.clause == "(1)"


def test_path_constructible_clauses():
    bt = build_subdivision(3, 3)
    dec = bt.decomposition
    rev = PathConstructibleDecomposition(dec.base, dec.paths[::-1])
    assert validate_path_constructible(bt.graph, rev)

    # a path whose endpoints only appear later
    H = colored(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    base = colored(1, [])
    late = PathConstructibleDecomposition(base, [((2, 3), PathPattern([1])), ((0, 1, 2), PathPattern([1, 1]))])
    res = validate_path_constructible(H, late)
    assert not res and res.clause == "(iii)"

    # interior vertex reused by a second path
    H = colored(5, [(0, 2, 1), (2, 1, 1), (3, 2, 1), (2, 4, 1)])
    base = RootedColoredGraph()
    for v in (0, 1, 3, 4):
        base.add_vertex(v)
    dup = PathConstructibleDecomposition(base, [((0, 2, 1), PathPattern([1, 1])), ((3, 2, 4), PathPattern([1, 1]))])
    res = validate_path_constructible(H, dup)
    assert not res and res.clause == "(ii)"


def test_star_forest_examples():
    F = build_star_forest([3, 3])
    assert len(F) == 8 and mono_max_degree(F) == 3
    assert F.roots == set(F.vertices)
    assert mono_max_degree(build_star_forest([3], [[1, 2, 3]])) == 1
    assert len(build_star_forest([])) == 0


def test_star_forest_of_subdivision():
    bt = build_subdivision(3, 5)
    stars = star_forest_of(bt.graph, bt.branches)
    assert len(stars) == 3 + 6
    with pytest.raises(TargetError):
        star_forest_of(build_subdivision(3, 1).graph, [0, 1])


@given(st.integers(1, 12), st.sampled_from(["constant", "alternating", "random"]), st.integers(0, 99), st.integers(1, 4))
def test_make_pattern(length, kind, seed, t):
    pat = make_pattern(length, kind, seed=seed, t=t)
    assert len(pat) == length and all(1 <= c <= t for c in pat.colors)
    assert pat == make_pattern(length, kind, seed=seed, t=t)
    assert pat.reversed().reversed() == pat


def test_rooted_graph_invariants():
    H = RootedColoredGraph()
    H.add_vertex(0)
    H.attach(1, 0, 1)
    H.attach(2, 1, 2)
    H.validate()
    assert H.promote(2) == [2, 1]
    assert H.roots == {0, 1, 2} and not H.parent
    H.relabel(2, 7)
    assert H.has_edge(1, 7) and H.color(1, 7) == 2
    with pytest.raises(TargetError):
        H.add_edge(0, 0, 1)
    bad = RootedColoredGraph()
    for v in range(3):
        bad.add_vertex(v, root=v != 1)
    bad.add_edge(0, 1, 1)
    bad.add_edge(1, 2, 1)
    bad.set_parent(1, 0)
    # roots 0 and 2 are separated by the non-root 1
    with pytest.raises(TargetError) as exc:
        bad.validate()
    assert exc.value.clause == "root-subtree"


def test_target_json_round_trip(tmp_path):
    bt = build_subdivision(3, 4, PathPattern([1, 2, 2, 1]))
    d = json.loads(json.dumps(built_to_dict(bt)))
    back = built_from_dict(d)
    assert back.graph.edge_set() == bt.graph.edge_set()
    assert back.decomposition.paths == bt.decomposition.paths
    save_target(bt.graph, tmp_path / "t.json", {"note": "x"})
    H, raw = load_target(tmp_path / "t.json")
    assert H.edge_set() == bt.graph.edge_set() and raw["note"] == "x"
