"""Hypothesis strategies shared by the test modules."""

import random

from hypothesis import strategies as st

from colorembed.engine import Embedding, EngineConfig, GoodnessParams
from colorembed.graphs import Graph, GraphFamily
from colorembed.targets import RootedColoredGraph


@st.composite
def graphs(draw, min_n=1, max_n=12):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [e for e, keep in zip(pairs, chosen) if keep])


@st.composite
def families(draw, min_n=1, max_n=12, max_t=3):
    n = draw(st.integers(min_n, max_n))
    t = draw(st.integers(1, max_t))
    return GraphFamily(tuple(draw(graphs(n, n)) for _ in range(t)))


def random_family(rng: random.Random, n: int, t: int, p: float) -> GraphFamily:
    out = []
    for _ in range(t):
        out.append(Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]))
    return GraphFamily(tuple(out))


def random_embedding(rng: random.Random, F: GraphFamily, size: int, D: int, roots: int = 2) -> Embedding:
    """Roots at random host vertices, then random legal child attachments (goodness ignored)."""
    e = Embedding(F, RootedColoredGraph(), {}, GoodnessParams(1, D), EngineConfig())
    free = list(range(F.n))
    rng.shuffle(free)
    for h in range(min(roots, size, F.n)):
        e.target.add_vertex(h)
        e.place(h, free.pop())
    h = len(e.target)
    tries = 0
    while h < size and tries < 200:
        tries += 1
        w = rng.choice(e.target.vertices)
        r = rng.randint(1, F.t)
        if e.target.color_degree(w, r) >= D:
            continue
        opts = [a for a in range(F.n) if (e.avail_row(e.map[w], r) >> a) & 1]
        if not opts:
            continue
        e.target.attach(h, w, r)
        e.place(h, rng.choice(opts))
        h += 1
    return e


def random_colored_set(rng: random.Random, F: GraphFamily, max_size: int) -> set:
    pairs = F.pairs()
    k = rng.randint(0, min(max_size, len(pairs)))
    return set(rng.sample(pairs, k))
