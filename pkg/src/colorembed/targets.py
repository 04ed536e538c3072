"""Edge-colored rooted target graphs and their builders.

A target records, besides its colored edges, which vertices are roots and,
for every non-root vertex, its parent and the color of the parent edge.
Non-root vertices form pendant trees that can be peeled off leaf by leaf.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .errors import TargetError


class RootedColoredGraph:
    """Simple graph with colored edges, a root set and parent links."""

    def __init__(self):
        self._adj: dict[int, dict[int, int]] = {}
        self.roots: set[int] = set()
        self.parent: dict[int, tuple[int, int]] = {}

    # construction ---------------------------------------------------------

    def add_vertex(self, v: int, root: bool = True) -> None:
        if v in self._adj:
            raise TargetError(f"vertex {v} already present")
        self._adj[v] = {}
        if root:
            self.roots.add(v)

    def add_edge(self, u: int, v: int, color: int) -> None:
        if u == v:
            raise TargetError(f"self-loop at {u}")
        if u not in self._adj or v not in self._adj:
            raise TargetError(f"edge ({u}, {v}) has an endpoint outside the graph")
        if v in self._adj[u]:
            raise TargetError(f"edge ({u}, {v}) already present")
        if color < 1:
            raise TargetError(f"color {color} must be >= 1")
        self._adj[u][v] = color
        self._adj[v][u] = color

    def attach(self, child: int, parent: int, color: int) -> None:
        """Add ``child`` as a non-root vertex hanging from ``parent``."""
        self.add_vertex(child, root=False)
        self.add_edge(parent, child, color)
        self.parent[child] = (parent, color)

    def set_parent(self, child: int, parent: int) -> None:
        if parent not in self._adj.get(child, {}):
            raise TargetError(f"{parent} is not adjacent to {child}")
        self.roots.discard(child)
        self.parent[child] = (parent, self._adj[child][parent])

    def remove_vertex(self, v: int) -> None:
        for u in self._adj.pop(v):
            del self._adj[u][v]
        self.roots.discard(v)
        self.parent.pop(v, None)

    def promote(self, v: int) -> list[int]:
        """Relabel ``v`` and all its ancestors as roots; returns the promoted vertices."""
        promoted = []
        while v not in self.roots:
            promoted.append(v)
            self.roots.add(v)
            v = self.parent.pop(v)[0]
        return promoted

    def relabel(self, old: int, new: int) -> None:
        if new in self._adj:
            raise TargetError(f"vertex {new} already present")
        nbrs = self._adj.pop(old)
        self._adj[new] = nbrs
        for u in nbrs:
            self._adj[u][new] = self._adj[u].pop(old)
        if old in self.roots:
            self.roots.discard(old)
            self.roots.add(new)
        if old in self.parent:
            self.parent[new] = self.parent.pop(old)
        for child, (par, c) in list(self.parent.items()):
            if par == old:
                self.parent[child] = (new, c)

    def copy(self) -> "RootedColoredGraph":
        h = RootedColoredGraph()
        h._adj = {v: dict(nb) for v, nb in self._adj.items()}
        h.roots = set(self.roots)
        h.parent = dict(self.parent)
        return h

    # queries --------------------------------------------------------------

    @property
    def vertices(self) -> list[int]:
        return list(self._adj)

    @property
    def m(self) -> int:
        return len(self._adj)

    def __contains__(self, v) -> bool:
        return v in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    def neighbors(self, v: int) -> dict[int, int]:
        return self._adj[v]

    def color(self, u: int, v: int) -> int | None:
        return self._adj[u].get(v)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj.get(u, {})

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def color_degree(self, v: int, color: int) -> int:
        return sum(1 for c in self._adj[v].values() if c == color)

    def edges(self) -> list[tuple[int, int, int]]:
        out = []
        for u, nb in self._adj.items():
            for v, c in nb.items():
                if (u < v) if _comparable(u, v) else (repr(u) < repr(v)):
                    out.append((u, v, c))
        return sorted(out, key=lambda e: (repr(e[0]), repr(e[1])))

    def edge_set(self) -> set[tuple[frozenset, int]]:
        return {(frozenset((u, v)), c) for u, v, c in self.edges()}

    def colors(self) -> set[int]:
        return {c for nb in self._adj.values() for c in nb.values()}

    def children(self, v: int) -> list[int]:
        return [c for c, (p, _) in self.parent.items() if p == v]

    def validate(self, max_color: int | None = None) -> None:
        """Raise :class:`TargetError` naming the first broken invariant."""
        for u, nb in self._adj.items():
            for v, c in nb.items():
                if self._adj.get(v, {}).get(u) != c:
                    raise TargetError(f"edge ({u}, {v}) not symmetric", "simple")
                if c < 1 or (max_color is not None and c > max_color):
                    raise TargetError(f"edge ({u}, {v}) has color {c} outside 1..{max_color}", "colors")
        if not self.roots <= set(self._adj):
            raise TargetError("root outside the vertex set", "roots")
        for v in self._adj:
            if v in self.roots:
                if v in self.parent:
                    raise TargetError(f"root {v} has a parent entry", "parent")
                continue
            if v not in self.parent:
                raise TargetError(f"non-root {v} has no parent", "parent")
            par, c = self.parent[v]
            if self._adj[v].get(par) != c:
                raise TargetError(f"parent edge ({v}, {par}) missing or not colored {c}", "parent")
        for v in self.parent:
            seen = {v}
            u = v
            while u not in self.roots:
                u = self.parent[u][0]
                if u in seen:
                    raise TargetError(f"parent links from {v} cycle", "acyclic")
                seen.add(u)
        # roots must form a subtree in every acyclic component
        for comp in self.components():
            n_edges = sum(len(self._adj[v]) for v in comp) // 2
            if n_edges != len(comp) - 1:
                continue
            rs = [v for v in comp if v in self.roots]
            if rs and not self._connected_within(set(rs)):
                raise TargetError("roots of a tree component do not induce a subtree", "root-subtree")

    def components(self) -> list[list[int]]:
        seen: set[int] = set()
        out = []
        for s in self._adj:
            if s in seen:
                continue
            comp = []
            dq = deque([s])
            seen.add(s)
            while dq:
                v = dq.popleft()
                comp.append(v)
                for u in self._adj[v]:
                    if u not in seen:
                        seen.add(u)
                        dq.append(u)
            out.append(comp)
        return out

    def _connected_within(self, vs: set[int]) -> bool:
        start = next(iter(vs))
        seen = {start}
        dq = deque([start])
        while dq:
            v = dq.popleft()
            for u in self._adj[v]:
                if u in vs and u not in seen:
                    seen.add(u)
                    dq.append(u)
        return seen == vs

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "vertices": sorted(self._adj),
            "edges": [[u, v, c] for u, v, c in self.edges()],
            "roots": sorted(self.roots),
            "parent": {str(v): [p, c] for v, (p, c) in sorted(self.parent.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RootedColoredGraph":
        h = cls()
        verts = d.get("vertices", range(d["m"]))
        roots = set(d.get("roots", verts))
        for v in verts:
            h.add_vertex(int(v), root=int(v) in roots)
        for u, v, c in d["edges"]:
            h.add_edge(int(u), int(v), int(c))
        for v, (p, c) in d.get("parent", {}).items():
            v = int(v)
            h.parent[v] = (int(p), int(c))
            h.roots.discard(v)
        if len(h) != d["m"]:
            raise TargetError(f"declared m={d['m']} but {len(h)} vertices given")
        h.validate()
        return h

    def __repr__(self):
        return f"RootedColoredGraph(m={self.m}, edges={len(self.edges())}, roots={len(self.roots)})"


def _comparable(u, v) -> bool:
    return isinstance(u, int) and isinstance(v, int)


@dataclass(frozen=True)
class PathPattern:
    """Edge colors of a path, listed from its first vertex to its last."""

    colors: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "colors", tuple(int(c) for c in self.colors))
        if not self.colors:
            raise TargetError("a path pattern needs at least one edge")
        if any(c < 1 for c in self.colors):
            raise TargetError(f"pattern colors must be >= 1: {self.colors}")

    def __len__(self):
        return len(self.colors)

    def __getitem__(self, i):
        return self.colors[i]

    def reversed(self) -> "PathPattern":
        return PathPattern(self.colors[::-1])


@dataclass
class PathConstructibleDecomposition:
    """Base graph plus an ordered list of paths ``(vertex sequence, pattern)``."""

    base: RootedColoredGraph
    paths: list[tuple[tuple[int, ...], PathPattern]] = field(default_factory=list)


@dataclass
class BuiltTarget:
    """A constructed target together with the data the pipelines consume."""

    graph: RootedColoredGraph
    branches: list
    decomposition: PathConstructibleDecomposition

    def __iter__(self):
        yield self.graph
        yield self.branches


@dataclass
class CheckResult:
    ok: bool
    clause: str | None = None
    message: str = ""

    def __bool__(self):
        return self.ok


# --- operations ----------------------------------------------------------------

def mono_max_degree(H: RootedColoredGraph) -> int:
    best = 0
    for v in H.vertices:
        counts: dict[int, int] = {}
        for c in H.neighbors(v).values():
            counts[c] = counts.get(c, 0) + 1
        if counts:
            best = max(best, max(counts.values()))
    return best


def tree_height(s: int, D: int) -> int:
    """Smallest ``k`` with ``(D-1)^k >= s``, i.e. ``ceil(log s / log(D-1))``."""
    if D < 3:
        raise TargetError(f"D = {D} must be at least 3")
    if s < 1:
        raise TargetError(f"s = {s} must be positive")
    k, leaves = 0, 1
    while leaves < s:
        leaves *= D - 1
        k += 1
    return k


def required_path_length(s: int, D: int) -> int:
    """``2 ceil(log s / log(D-1)) + 3``, computed in integers."""
    return 2 * tree_height(s, D) + 3


def make_pattern(length: int, spec="constant", seed: int = 0, t: int = 1, color: int = 1) -> PathPattern:
    """Pattern of ``length`` edges: ``constant``, ``alternating`` over ``1..t``, or ``random``."""
    if spec == "constant":
        return PathPattern([color] * length)
    if spec == "alternating":
        return PathPattern([(i % t) + 1 for i in range(length)])
    if spec == "random":
        rng = random.Random(seed)
        return PathPattern([rng.randint(1, t) for _ in range(length)])
    return PathPattern(spec)


def _pair_value(table, i, j, default=None):
    if table is None:
        return default
    if isinstance(table, dict):
        return table.get((i, j), table.get((j, i), default))
    if isinstance(table, (int, PathPattern)) or (isinstance(table, (tuple, list)) and table and isinstance(table[0], int)):
        return table
    return table[i][j]


def build_subdivision(D: int, lengths, patterns=None) -> BuiltTarget:
    """Subdivision of ``K_D``: branch vertices ``0..D-1`` joined by colored paths.

    ``lengths`` is an int, a ``D x D`` matrix or a dict keyed by pairs;
    ``patterns`` likewise maps pairs to a :class:`PathPattern` or color list
    (default: constant color 1). Each pattern is read from the lower-indexed
    branch vertex, and interior parents point toward it.
    """
    if D < 3:
        raise TargetError(f"D = {D} must be at least 3")
    H = RootedColoredGraph()
    for b in range(D):
        H.add_vertex(b)
    base = H.copy()
    paths = []
    nxt = D
    for i, j in combinations(range(D), 2):
        L = int(_pair_value(lengths, i, j))
        if L < 1:
            raise TargetError(f"path {i}-{j} has length {L} < 1")
        pat = _pair_value(patterns, i, j)
        pat = PathPattern([1] * L) if pat is None else (pat if isinstance(pat, PathPattern) else PathPattern(pat))
        if len(pat) != L:
            raise TargetError(f"pattern for {i}-{j} has {len(pat)} colors but length {L}")
        seq = [i] + list(range(nxt, nxt + L - 1)) + [j]
        nxt += L - 1
        for pos in range(1, L):
            H.attach(seq[pos], seq[pos - 1], pat[pos - 1])
        H.add_edge(seq[-2], j, pat[L - 1])
        paths.append((tuple(seq), pat))
    H.validate()
    return BuiltTarget(H, list(range(D)), PathConstructibleDecomposition(base, paths))


def _check_tree(vertices: Sequence[int], edges: Sequence[tuple[int, int, int]], label) -> None:
    vs = set(vertices)
    if len(vs) != len(vertices):
        raise TargetError(f"branch {label} repeats a vertex", "(1)")
    if len(edges) != len(vs) - 1:
        raise TargetError(f"branch {label} is not a tree ({len(edges)} edges on {len(vs)} vertices)", "(1)")
    adj: dict[int, list[int]] = {v: [] for v in vs}
    for u, v, _ in edges:
        if u not in vs or v not in vs:
            raise TargetError(f"branch {label} edge ({u}, {v}) leaves the branch", "(1)")
        adj[u].append(v)
        adj[v].append(u)
    start = vertices[0]
    seen = {start}
    dq = deque([start])
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                dq.append(y)
    if seen != vs:
        raise TargetError(f"branch {label} is disconnected", "(1)")


def build_expansion(branch_trees, path_specs) -> BuiltTarget:
    """Expansion of a complete graph.

    ``branch_trees`` is a list of ``(vertices, edges)`` with edges
    ``(u, v, color)`` in global ids; ``path_specs`` maps each pair ``(x, y)``
    with ``x < y`` to ``(vertex sequence, pattern)`` whose first vertex lies
    in tree ``x`` and last in tree ``y``. Violations raise
    :class:`TargetError` with ``clause`` set to the failing condition
    ``(1)``, ``(2)``, ``(3)``, ``(5)`` or ``(6)``.
    """
    K = len(branch_trees)
    tree_of: dict[int, int] = {}
    for x, (verts, edges) in enumerate(branch_trees):
        _check_tree(list(verts), list(edges), x)
        for v in verts:
            if v in tree_of:
                raise TargetError(f"vertex {v} lies in branches {tree_of[v]} and {x}", "(3)")
            tree_of[v] = x
    pairs = {tuple(sorted(k)) for k in path_specs}
    if pairs != set(combinations(range(K), 2)):
        raise TargetError("every pair of branches needs exactly one path", "(6)")
    interior_owner: dict[int, tuple] = {}
    norm_specs = {}
    for key, (seq, pat) in path_specs.items():
        x, y = key
        seq = tuple(seq)
        pat = pat if isinstance(pat, PathPattern) else PathPattern(pat)
        if x > y:
            x, y = y, x
            seq, pat = seq[::-1], pat.reversed()
        if len(seq) < 2 or len(set(seq)) != len(seq):
            raise TargetError(f"path {x}-{y} is not a path", "(2)")
        if len(pat) != len(seq) - 1:
            raise TargetError(f"path {x}-{y}: pattern length {len(pat)} != {len(seq) - 1}", "(2)")
        for v in seq:
            owner = tree_of.get(v)
            if owner is not None and owner not in (x, y):
                raise TargetError(f"path {x}-{y} meets branch {owner}", "(5)")
        if tree_of.get(seq[0]) != x or tree_of.get(seq[-1]) != y:
            raise TargetError(f"path {x}-{y} must start in branch {x} and end in branch {y}", "(6)")
        for v in seq[1:-1]:
            if v in tree_of:
                raise TargetError(f"interior vertex {v} of path {x}-{y} lies in a branch", "(3)")
            if v in interior_owner:
                raise TargetError(f"paths {interior_owner[v]} and {(x, y)} share vertex {v}", "(3)")
            interior_owner[v] = (x, y)
        norm_specs[(x, y)] = (seq, pat)

    H = RootedColoredGraph()
    base = RootedColoredGraph()
    for x, (verts, edges) in enumerate(branch_trees):
        for v in verts:
            H.add_vertex(v)
        for u, v, c in edges:
            H.add_edge(u, v, c)
        # base: one root per branch, the rest hanging in BFS order
        verts = list(verts)
        base.add_vertex(verts[0])
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in verts}
        for u, v, c in edges:
            adj[u].append((v, c))
            adj[v].append((u, c))
        dq = deque([verts[0]])
        while dq:
            a = dq.popleft()
            for b, c in sorted(adj[a]):
                if b not in base:
                    base.attach(b, a, c)
                    dq.append(b)
    paths = []
    for (x, y) in sorted(norm_specs):
        seq, pat = norm_specs[(x, y)]
        L = len(seq) - 1
        for pos in range(1, L):
            H.attach(seq[pos], seq[pos - 1], pat[pos - 1])
        H.add_edge(seq[-2], seq[-1], pat[L - 1])
        paths.append((seq, pat))
    H.validate()
    return BuiltTarget(H, [list(v) for v, _ in branch_trees], PathConstructibleDecomposition(base, paths))


def expansion_layout(D: int, tree_sizes: Sequence[int], length: int, patterns=None, tree_color: int = 1):
    """Global-id input for :func:`build_expansion`: path-shaped branches of the
    given sizes, consecutive pairs of branches joined from distinct branch
    vertices where possible.
    """
    trees = []
    nxt = 0
    for size in tree_sizes[:D]:
        verts = list(range(nxt, nxt + size))
        edges = [(verts[i], verts[i + 1], tree_color) for i in range(size - 1)]
        trees.append((verts, edges))
        nxt += size
    use = [0] * D
    specs = {}
    for x, y in combinations(range(D), 2):
        a = trees[x][0][use[x] % len(trees[x][0])]
        b = trees[y][0][use[y] % len(trees[y][0])]
        use[x] += 1
        use[y] += 1
        pat = _pair_value(patterns, x, y)
        pat = PathPattern([1] * length) if pat is None else pat
        seq = [a] + list(range(nxt, nxt + length - 1)) + [b]
        nxt += length - 1
        specs[(x, y)] = (seq, pat)
    return trees, specs


def validate_path_constructible(H: RootedColoredGraph, decomposition: PathConstructibleDecomposition) -> CheckResult:
    """Check the ordered decomposition against ``H``.

    (i) base and path edges are pairwise disjoint and cover ``E(H)`` with the
    right colors; (ii) path interiors are fresh when the path is added;
    (iii) every path has an endpoint already present.
    """
    base = decomposition.base
    seen_edges: dict[frozenset, str] = {}
    for u, v, c in base.edges():
        if H.color(u, v) != c if u in H and v in H else True:
            return CheckResult(False, "(i)", f"base edge ({u}, {v}, {c}) is not an edge of H")
        seen_edges[frozenset((u, v))] = "base"
    present = set(base.vertices)
    for idx, (seq, pat) in enumerate(decomposition.paths):
        seq = tuple(seq)
        if len(seq) < 2 or len(set(seq)) != len(seq) or len(pat) != len(seq) - 1:
            return CheckResult(False, "(i)", f"path {idx} is not a simple path matching its pattern")
        for pos in range(len(seq) - 1):
            u, v = seq[pos], seq[pos + 1]
            if u not in H or v not in H or H.color(u, v) != pat[pos]:
                return CheckResult(False, "(i)", f"path {idx} edge ({u}, {v}) is not an edge of H with color {pat[pos]}")
            key = frozenset((u, v))
            if key in seen_edges:
                return CheckResult(False, "(i)", f"path {idx} reuses edge ({u}, {v}) from {seen_edges[key]}")
            seen_edges[key] = f"path {idx}"
        for v in seq[1:-1]:
            if v in present:
                return CheckResult(False, "(ii)", f"interior vertex {v} of path {idx} already present")
        if seq[0] not in present and seq[-1] not in present:
            return CheckResult(False, "(iii)", f"path {idx} has no endpoint already present")
        present.update(seq)
    h_edges = {frozenset((u, v)) for u, v, _ in H.edges()}
    missing = h_edges - set(seen_edges)
    if missing:
        u, v = sorted(next(iter(missing)))
        return CheckResult(False, "(i)", f"edge ({u}, {v}) of H is not covered")
    if present != set(H.vertices):
        return CheckResult(False, "(i)", "vertex sets differ")
    return CheckResult(True)


def build_star_forest(degrees: Sequence[int], colorings=None) -> RootedColoredGraph:
    """Disjoint stars; every vertex (center and leaf) is a root.

    Star ``j`` has center id ``sum(degrees[:j]) + j`` followed by its leaves.
    """
    F = RootedColoredGraph()
    nxt = 0
    for j, deg in enumerate(degrees):
        cols = [1] * deg if colorings is None else list(colorings[j])
        if len(cols) != deg:
            raise TargetError(f"star {j}: {len(cols)} colors for degree {deg}")
        center = nxt
        F.add_vertex(center)
        for i, c in enumerate(cols):
            F.add_vertex(center + 1 + i)
            F.add_edge(center, center + 1 + i, c)
        nxt += deg + 1
    F.validate()
    return F


def star_forest_of(H: RootedColoredGraph, centers: Iterable[int]) -> RootedColoredGraph:
    """Stars of ``H`` formed by ``centers`` and their neighbors, keeping ids."""
    F = RootedColoredGraph()
    centers = list(centers)
    for c in centers:
        F.add_vertex(c)
    for c in centers:
        for v, col in sorted(H.neighbors(c).items()):
            if v in F:
                raise TargetError(f"stars at {c} overlap at {v}; branch vertices must not be adjacent")
            F.add_vertex(v)
            F.add_edge(c, v, col)
    return F


def save_target(H: RootedColoredGraph, path, extra: dict | None = None) -> None:
    d = H.to_dict()
    if extra:
        d.update(extra)
    Path(path).write_text(json.dumps(d, sort_keys=True) + "\n")


def load_target(path):
    d = json.loads(Path(path).read_text())
    return RootedColoredGraph.from_dict(d), d


def built_to_dict(bt: BuiltTarget) -> dict:
    d = bt.graph.to_dict()
    d["branches"] = bt.branches
    d["decomposition"] = {
        "base": bt.decomposition.base.to_dict(),
        "paths": [{"vertices": list(seq), "pattern": list(pat.colors)} for seq, pat in bt.decomposition.paths],
    }
    return d


def built_from_dict(d: dict) -> BuiltTarget:
    H = RootedColoredGraph.from_dict(d)
    if "decomposition" not in d:
        raise TargetError("target file carries no decomposition")
    dec = d["decomposition"]
    base = RootedColoredGraph.from_dict(dec["base"])
    paths = [(tuple(p["vertices"]), PathPattern(p["pattern"])) for p in dec["paths"]]
    return BuiltTarget(H, d.get("branches", []), PathConstructibleDecomposition(base, paths))
