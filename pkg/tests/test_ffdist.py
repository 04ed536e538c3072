import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from colorembed.errors import CapExceeded, GraphError, PreconditionError
from colorembed.ffdist import (
    DistanceGraphSpec,
    FieldPoint,
    all_points,
    build_distance_family,
    build_distance_graph,
    c_large,
    c_small,
    character_eigenvalues,
    embed_distance_subdivision,
    ff_norm,
    nominal_beta,
    point_index,
    read_points,
    spectral_params,
    thresholds,
    write_points,
)
from colorembed.targets import PathPattern, build_subdivision


def brute_sphere(q, d, r):
    return sum(1 for z in itertools.product(range(q), repeat=d) if sum(x * x for x in z) % q == r)


def test_ff_norm_examples():
    P = lambda *c: FieldPoint(3, 2, c)
    assert ff_norm(P(0, 0), P(0, 1)) == 1
    assert ff_norm(P(2, 1), P(2, 1)) == 0
    assert ff_norm(P(0, 0), P(1, 1)) == 2
    with pytest.raises(GraphError):
        ff_norm(P(0, 0), FieldPoint(5, 2, (0, 0)))


def test_field_point_validation():
    with pytest.raises(PreconditionError):
        FieldPoint(4, 2, (0, 0))
    with pytest.raises(PreconditionError):
        FieldPoint(3, 1, (0,))
    with pytest.raises(GraphError):
        FieldPoint(3, 2, (0, 3))


@given(st.sampled_from([3, 5, 7]), st.integers(2, 3), st.data())
def test_ff_norm_symmetric(q, d, data):
    x = data.draw(st.tuples(*[st.integers(0, q - 1)] * d))
    y = data.draw(st.tuples(*[st.integers(0, q - 1)] * d))
    a, b = FieldPoint(q, d, x), FieldPoint(q, d, y)
    assert ff_norm(a, b) == ff_norm(b, a)


def test_distance_graph_examples():
    g, P = build_distance_graph(3, 2, 1)
    assert g.n == 9 and set(g.degrees()) == {4} and g.num_edges == 18
    assert P.shape == (9, 2)
    g5, _ = build_distance_graph(5, 2, 1)
    assert g5.n == 25 and set(g5.degrees()) == {4}
    with pytest.raises(PreconditionError):
        build_distance_graph(3, 2, 0)
    with pytest.raises(CapExceeded):
        build_distance_graph(3, 2, 1, cap=8)


@pytest.mark.parametrize("q,d", [(3, 2), (5, 2), (3, 3), (7, 2)])
def test_distance_graph_matches_norms(q, d):
    P = all_points(q, d)
    for r in range(1, q):
        g, _ = build_distance_graph(q, d, r)
        assert set(g.degrees()) == {brute_sphere(q, d, r)}
        for i, j in itertools.combinations(range(len(P)), 2):
            want = int(((P[i] - P[j]) ** 2).sum() % q) == r
            assert g.has_edge(i, j) == want


def test_point_index_order():
    P = all_points(5, 3)
    assert all(point_index(p, 5) == i for i, p in enumerate(P))


def test_distance_family_examples():
    F = build_distance_family(DistanceGraphSpec(3, 2, (2, 1)))
    assert (F.n, F.t) == (9, 2)
    assert F.meta["distances"] == [1, 2]
    g1, _ = build_distance_graph(3, 2, 1)
    assert F.graphs[0] == g1
    single = build_distance_family(DistanceGraphSpec(5, 2, (1,)))
    assert single.t == 1
    for u, v in itertools.combinations(range(9), 2):
        assert F.graphs[0].has_edge(u, v) + F.graphs[1].has_edge(u, v) <= 1


def test_spec_validation():
    with pytest.raises(PreconditionError):
        DistanceGraphSpec(3, 2, (0,))
    with pytest.raises(PreconditionError):
        DistanceGraphSpec(3, 2, ())
    spec = DistanceGraphSpec(5, 2, (4, 1))
    assert spec.distances == (1, 4) and spec.color_of(4) == 2
    with pytest.raises(PreconditionError):
        spec.color_of(2)


@pytest.mark.parametrize("q,d", [(3, 2), (5, 2), (3, 3), (7, 2), (5, 3)])
def test_character_sums_match_dense_spectrum(q, d):
    for r in range(1, q):
        g, _ = build_distance_graph(q, d, r)
        dense = np.sort(np.linalg.eigvalsh(g.adjacency_matrix(dtype=float)))
        chars = np.sort(character_eigenvalues(q, d, r))
        assert np.allclose(dense, chars, atol=1e-9)


def test_spectral_params_examples():
    rep = spectral_params(3, 2, 1)
    assert rep.p == pytest.approx(4 / 9) and rep.beta == pytest.approx(2)
    assert rep.beta_nominal == pytest.approx(2 * math.sqrt(3)) and rep.within_bound
    rep5 = spectral_params(5, 2, 1)
    assert rep5.beta <= 2 * math.sqrt(5) and rep5.degree == 4
    assert max(character_eigenvalues(5, 2, 1)) == pytest.approx(rep5.degree)


def test_nominal_beta():
    assert nominal_beta(3, 3) == pytest.approx(6)
    assert nominal_beta(5, 2) == pytest.approx(2 * math.sqrt(5))


def test_threshold_examples():
    rep = thresholds(3, 3, 1, measure=False)
    assert rep.C_small == 648
    assert rep.ell_small == 26
    assert rep.ell_large == 20
    assert thresholds(5, 2, [1], epsilon=Fraction(1, 3), measure=False).ell_large == 22


def test_threshold_formulas_exact():
    for q, d, k in itertools.product([3, 5, 7], [2, 3, 4], [1, 2, 4]):
        assert sympy.simplify(c_small(q, d, k) ** 2 - 72**2 * k * q ** (d + 1)) == 0
        eps = Fraction(1, 4)
        assert sympy.simplify(c_large(q, d, k, eps) ** 8 - 200**8 * k**6 * q ** (5 * (d + 1))) == 0


def test_thresholds_measure_s():
    rep = thresholds(3, 2, [1, 2])
    assert rep.s is not None and rep.p == pytest.approx(4 / 9)
    with pytest.raises(PreconditionError):
        thresholds(3, 2, [1], epsilon=Fraction(3, 4))


def test_points_round_trip(tmp_path):
    pts = [(0, 1), (2, 2), (1, 0)]
    write_points(tmp_path / "E.txt", 3, 2, pts)
    assert read_points(tmp_path / "E.txt") == (3, 2, pts)
    (tmp_path / "bad.txt").write_text("q=3,d=2\n0,1,2\n")
    with pytest.raises(GraphError):
        read_points(tmp_path / "bad.txt")


def test_distance_embedding_end_to_end():
    spec = DistanceGraphSpec(5, 2, (1,))
    bt = build_subdivision(3, 5, PathPattern([1] * 5))
    out = embed_distance_subdivision(all_points(5, 2), spec, bt)
    assert out.s == 11 and out.s_source == "exhaustive"
    assert out.embedding.target.edge_set() == bt.graph.edge_set()
    assert len(set(out.points.values())) == len(out.points)
    for u, v, _ in bt.graph.edges():
        assert ff_norm(FieldPoint(5, 2, out.points[u]), FieldPoint(5, 2, out.points[v])) == 1
    assert all(want == got for _, _, want, got in out.realized)


def test_distance_embedding_errors():
    spec = DistanceGraphSpec(5, 2, (1,))
    with pytest.raises(PreconditionError):
        embed_distance_subdivision(all_points(5, 2), spec, build_subdivision(3, 5, PathPattern([2] * 5)))
    with pytest.raises(PreconditionError):
        embed_distance_subdivision(all_points(5, 2)[:3], spec, build_subdivision(3, 5, PathPattern([1] * 5)))
