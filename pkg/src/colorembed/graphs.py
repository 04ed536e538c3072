"""Graphs, graph families and the neighborhood operators on them.

Adjacency is stored as one Python ``int`` bit row per vertex, so the union of
neighborhoods is a word-parallel OR and set sizes are ``int.bit_count``.
Colors are 1-based in the public API (``family.graph(c)`` for ``c`` in
``1..t``) and 0-based in the JSON arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphError

ColoredPair = tuple[int, int]


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def bits_of(mask: int) -> list[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class Graph:
    """Simple undirected graph on ``0..n-1``; immutable after construction."""

    __slots__ = ("n", "rows", "_m")

    def __init__(self, n: int, rows: Sequence[int], _checked: bool = False):
        if _checked:
            self._set(n, rows)
            return
        if n < 0 or len(rows) != n:
            raise GraphError(f"expected {n} adjacency rows, got {len(rows)}")
        full = (1 << n) - 1
        for v, row in enumerate(rows):
            if row & ~full:
                raise GraphError(f"row {v} references a vertex outside 0..{n - 1}")
            if row >> v & 1:
                raise GraphError(f"self-loop at vertex {v}")
        for v, row in enumerate(rows):
            for u in bits_of(row):
                if not rows[u] >> v & 1:
                    raise GraphError(f"adjacency not symmetric at ({v}, {u})")
        self._set(n, rows)

    def _set(self, n, rows):
        self.n = n
        self.rows = tuple(rows)
        self._m = sum(r.bit_count() for r in self.rows) // 2

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        rows = [0] * n
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) outside 0..{n - 1}")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, rows)

    @classmethod
    def from_matrix(cls, adj) -> "Graph":
        a = np.asarray(adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError("adjacency matrix must be square")
        n = a.shape[0]
        if n == 0:
            return cls(0, [])
        if a.diagonal().any():
            raise GraphError("self-loop in adjacency matrix")
        if not np.array_equal(a, a.T):
            raise GraphError("adjacency matrix is not symmetric")
        # little-endian bit order so bit v of the int is column v
        packed = np.packbits(a, axis=1, bitorder="little")
        rows = [int.from_bytes(packed[v].tobytes(), "little") for v in range(n)]
        return cls(n, rows, _checked=True)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls(n, [full & ~(1 << v) for v in range(n)])

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, [0] * n)

    @property
    def num_edges(self) -> int:
        return self._m

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.rows[u] >> v & 1)

    def neighbors(self, v: int) -> list[int]:
        return bits_of(self.rows[v])

    def degree(self, v: int) -> int:
        return self.rows[v].bit_count()

    def degrees(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in bits_of(self.rows[u] >> (u + 1) << (u + 1))]

    def adjacency_matrix(self, dtype=float) -> np.ndarray:
        nbytes = (self.n + 7) // 8
        buf = b"".join(r.to_bytes(nbytes, "little") for r in self.rows)
        bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8).reshape(self.n, nbytes), axis=1, bitorder="little")
        return bits[:, : self.n].astype(dtype)

    def is_regular(self) -> bool:
        degs = self.degrees()
        return len(set(degs)) <= 1

    def induced(self, vertices: Sequence[int]) -> "Graph":
        index = {v: i for i, v in enumerate(vertices)}
        rows = []
        for v in vertices:
            rows.append(mask_of(index[u] for u in bits_of(self.rows[v]) if u in index))
        return Graph(len(vertices), rows, _checked=True)

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.rows == other.rows

    def __hash__(self):
        return hash((self.n, self.rows))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self._m})"


@dataclass(frozen=True)
class GraphFamily:
    """``t`` graphs on one shared vertex set ``0..n-1``.

    ``labels`` is an optional side table of external vertex names (e.g. points
    of F_q^d); ``meta`` carries provenance such as the distance-to-color map.
    """

    graphs: tuple[Graph, ...]
    labels: tuple | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        graphs = tuple(self.graphs)
        object.__setattr__(self, "graphs", graphs)
        if not graphs:
            raise GraphError("a graph family needs at least one graph (t >= 1)")
        n = graphs[0].n
        if any(g.n != n for g in graphs):
            raise GraphError("all member graphs must share the vertex set 0..n-1")
        if self.labels is not None and len(self.labels) != n:
            raise GraphError("labels must name every vertex")

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def t(self) -> int:
        return len(self.graphs)

    def graph(self, color: int) -> Graph:
        if not 1 <= color <= self.t:
            raise GraphError(f"color {color} outside 1..{self.t}")
        return self.graphs[color - 1]

    def row(self, v: int, color: int) -> int:
        return self.graphs[color - 1].rows[v]

    def pairs(self) -> list[ColoredPair]:
        """All of V x [t] in (vertex, color) order."""
        return [(v, c) for v in range(self.n) for c in range(1, self.t + 1)]

    def check_vertices(self, vertices: Iterable[int]) -> None:
        for v in vertices:
            if not (isinstance(v, (int, np.integer)) and 0 <= v < self.n):
                raise GraphError(f"vertex {v!r} outside 0..{self.n - 1}")

    def check_pairs(self, X: Iterable[ColoredPair]) -> None:
        for v, c in X:
            if not 0 <= v < self.n:
                raise GraphError(f"vertex {v} outside 0..{self.n - 1}")
            if not 1 <= c <= self.t:
                raise GraphError(f"color {c} outside 1..{self.t}")

    @classmethod
    def single(cls, g: Graph) -> "GraphFamily":
        return cls((g,))


def edge_count(G: Graph, X: Iterable[int], Y: Iterable[int]) -> int:
    """Number of ordered pairs ``(x, y)`` in ``X x Y`` with ``xy`` an edge.

    An edge with both ends in ``X & Y`` is counted twice.
    """
    X = list(X)
    Y = list(Y)
    for v in X + Y:
        if not 0 <= v < G.n:
            raise GraphError(f"vertex {v} outside 0..{G.n - 1}")
    ymask = mask_of(Y)
    return sum((G.rows[x] & ymask).bit_count() for x in set(X))


def neighborhood_mask(F: GraphFamily, X: Iterable[ColoredPair]) -> int:
    u = 0
    for v, c in X:
        u |= F.graphs[c - 1].rows[v]
    return u


def family_neighborhood(F: GraphFamily, X: Iterable[ColoredPair]) -> set[int]:
    """Union over ``(v, i)`` in ``X`` of the neighbors of ``v`` in ``G_i``."""
    X = list(X)
    F.check_pairs(X)
    return set(bits_of(neighborhood_mask(F, X)))


def external_family_neighborhood(F: GraphFamily, X: Iterable[ColoredPair], Y: Iterable[int]) -> set[int]:
    """``(Gamma(X) & Y) - X|_V``: neighbors inside ``Y`` not occupied by ``X``."""
    X = list(X)
    F.check_pairs(X)
    Y = list(Y)
    F.check_vertices(Y)
    support = mask_of(v for v, _ in X)
    return set(bits_of(neighborhood_mask(F, X) & mask_of(Y) & ~support))


@dataclass(frozen=True)
class AuxiliaryBipartite:
    """Bipartite graph on ``(V x [t], V)`` with ``(u, i) ~ v`` iff ``u ~ v`` in ``G_i``."""

    n: int
    t: int
    left: tuple[ColoredPair, ...]
    left_rows: tuple[int, ...]

    @property
    def right(self) -> range:
        return range(self.n)

    def index(self, pair: ColoredPair) -> int:
        v, c = pair
        return v * self.t + (c - 1)

    def has_edge(self, pair: ColoredPair, v: int) -> bool:
        return bool(self.left_rows[self.index(pair)] >> v & 1)

    def neighbors(self, pair: ColoredPair) -> list[int]:
        return bits_of(self.left_rows[self.index(pair)])

    def left_degree(self, pair: ColoredPair) -> int:
        return self.left_rows[self.index(pair)].bit_count()

    def right_degree(self, v: int) -> int:
        return sum(row >> v & 1 for row in self.left_rows)

    @property
    def num_edges(self) -> int:
        return sum(r.bit_count() for r in self.left_rows)

    def edge_count(self, X: Iterable[ColoredPair], Y: Iterable[int]) -> int:
        ymask = mask_of(Y)
        return sum((self.left_rows[self.index(p)] & ymask).bit_count() for p in set(X))

    def biadjacency(self) -> np.ndarray:
        """``(n*t, n)`` 0/1 matrix, rows in ``left`` order."""
        out = np.zeros((len(self.left), self.n), dtype=np.int64)
        for i, row in enumerate(self.left_rows):
            for v in bits_of(row):
                out[i, v] = 1
        return out


def build_auxiliary(F: GraphFamily) -> AuxiliaryBipartite:
    left = tuple(F.pairs())
    rows = tuple(F.row(v, c) for v, c in left)
    return AuxiliaryBipartite(F.n, F.t, left, rows)


def restrict_family(F: GraphFamily, vertices: Iterable[int]) -> tuple[GraphFamily, tuple[int, ...]]:
    """Induced subfamily on ``vertices``, re-indexed contiguously.

    Returns the subfamily and ``old_ids`` with ``old_ids[new] == old``.
    """
    old_ids = tuple(sorted(set(vertices)))
    if not old_ids:
        raise GraphError("cannot restrict a family to an empty vertex set")
    F.check_vertices(old_ids)
    graphs = tuple(g.induced(old_ids) for g in F.graphs)
    labels = None if F.labels is None else tuple(F.labels[v] for v in old_ids)
    return GraphFamily(graphs, labels=labels, meta=dict(F.meta)), old_ids


# --- serialization -----------------------------------------------------------

SCHEMA_PATH = Path(__file__).with_name("schemas") / "family.schema.json"


def family_to_dict(F: GraphFamily) -> dict:
    d = {"n": F.n, "t": F.t, "edges": [[list(e) for e in g.edges()] for g in F.graphs]}
    if F.labels is not None:
        d["labels"] = [list(x) if isinstance(x, (tuple, list)) else x for x in F.labels]
    if F.meta:
        d["meta"] = F.meta
    return d


def family_from_dict(d: dict) -> GraphFamily:
    import jsonschema

    schema = json.loads(SCHEMA_PATH.read_text())
    try:
        jsonschema.validate(d, schema)
    except jsonschema.ValidationError as exc:
        raise GraphError(f"invalid family JSON: {exc.message}") from None
    n, t = d["n"], d["t"]
    if len(d["edges"]) != t:
        raise GraphError(f"expected {t} edge lists, got {len(d['edges'])}")
    graphs = tuple(Graph.from_edges(n, edges) for edges in d["edges"])
    labels = d.get("labels")
    if labels is not None:
        labels = tuple(tuple(x) if isinstance(x, list) else x for x in labels)
    return GraphFamily(graphs, labels=labels, meta=d.get("meta", {}))


def save_family(F: GraphFamily, path) -> None:
    Path(path).write_text(json.dumps(family_to_dict(F), sort_keys=True) + "\n")


def load_family(path) -> GraphFamily:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: not valid JSON ({exc})") from None
    return family_from_dict(d)


_DOT_COLORS = ["black", "red", "blue", "darkgreen", "orange", "purple", "brown", "cyan"]


def graph_to_dot(g: Graph, name: str = "G") -> str:
    lines = [f"graph {name} {{"]
    lines += [f"  {v};" for v in range(g.n)]
    lines += [f"  {u} -- {v};" for u, v in g.edges()]
    lines.append("}")
    return "\n".join(lines) + "\n"


def family_to_dot(F: GraphFamily, name: str = "family") -> str:
    """Merged multigraph; each edge carries its 1-based color."""
    lines = [f"graph {name} {{"]
    lines += [f"  {v};" for v in range(F.n)]
    for c, g in enumerate(F.graphs, start=1):
        dot_color = _DOT_COLORS[(c - 1) % len(_DOT_COLORS)]
        lines += [f'  {u} -- {v} [color="{dot_color}", label="{c}", colorindex={c}];' for u, v in g.edges()]
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(F: GraphFamily, outdir, stem: str = "family") -> list[Path]:
    """One DOT file per color plus the merged multigraph."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for c, g in enumerate(F.graphs, start=1):
        p = outdir / f"{stem}_color{c}.dot"
        p.write_text(graph_to_dot(g, f"{stem}_color{c}"))
        written.append(p)
    p = outdir / f"{stem}_merged.dot"
    p.write_text(family_to_dot(F, stem))
    written.append(p)
    return written
