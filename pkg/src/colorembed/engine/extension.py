"""Extension, connection and roll-back operations on embeddings.

All operations mutate the embedding in place and return it. In exact mode a
vertex extension enumerates the tight sets of the current embedding once:
a candidate ``a`` breaks goodness exactly when some tight ``X`` avoiding
``(phi(w), r)`` has ``a`` in its neighborhood.
"""

from __future__ import annotations

import random
from collections import deque
from typing import Sequence

from ..errors import (
    EmbeddingError,
    ExtensionError,
    InternalInconsistency,
    JoinednessViolation,
    PreconditionError,
    SearchFailure,
    TargetError,
)
from ..graphs import GraphFamily, bits_of
from ..targets import (
    PathConstructibleDecomposition,
    PathPattern,
    RootedColoredGraph,
    required_path_length,
    tree_height,
    validate_path_constructible,
)
from .embedding import EngineConfig, Embedding, GoodnessParams, check_extension, delta_residual, residual
from .goodness import CACHE_SLACK, enumerate_low, greedy_violator, verify_good


def _fresh_id(e: Embedding) -> int:
    return max(e.target.vertices, default=-1) + 1


def _size_check(e: Embedding, total: int, slack: int, step: str) -> None:
    """Enforce ``total <= |universe| - slack`` when the host is certified."""
    if not e.config.certified:
        return
    n = e.n_universe
    if total > n - slack:
        raise PreconditionError(
            f"{step}: {total} target vertices exceed n - {slack} = {n - slack}", f"|V(H)| <= n - {slack}"
        )


def milestone(e: Embedding, label: str) -> None:
    """Exact goodness check recorded in the step log when milestones are on."""
    if not e.config.milestones:
        return
    rep = verify_good(e, mode="exact")
    e.log("milestone", label=label, verdict=rep.verdict, witness=rep.witness)
    if not rep.passed:
        raise InternalInconsistency(f"milestone {label!r} failed exact verification: X={rep.witness}", rep.to_dict())


def _order(e: Embedding, cands: list[int]) -> list[int]:
    if e.config.shuffle_seed is None:
        return cands
    rng = random.Random(e.config.shuffle_seed * 1_000_003 + len(e.steps))
    cands = list(cands)
    rng.shuffle(cands)
    return cands


def _tight_forbidden(e: Embedding, x0: tuple[int, int]) -> int:
    """Union of neighborhoods of tight sets avoiding ``x0`` (exact mode)."""
    low = enumerate_low(e, e.params.bound, 0)
    forbidden = 0
    for X, R, gam in low:
        if R < 0:
            raise PreconditionError(f"embedding is not good: R({X}) = {R}", "(2s, D)-good")
        if x0 not in X:
            forbidden |= gam
    return forbidden


def extend_vertex(e: Embedding, w: int, r: int, u: int | None = None) -> Embedding:
    """Attach a new non-root child ``u`` of ``w`` via color ``r`` and embed it."""
    s, D = e.params.s, e.params.D
    if w not in e.map:
        raise PreconditionError(f"target vertex {w} is not embedded", "w embedded")
    if not 1 <= r <= e.host.t:
        raise PreconditionError(f"color {r} outside 1..{e.host.t}", "color")
    if e.target.color_degree(w, r) >= D:
        raise PreconditionError(f"deg_{r}({w}) = {e.target.color_degree(w, r)} is not below D = {D}", "deg_H_r(w) < D")
    _size_check(e, len(e.target), 2 * s * D + 3 * s, "vertex extension")
    u = _fresh_id(e) if u is None else u
    if u in e.target:
        raise TargetError(f"vertex id {u} already in the target")
    x0 = (e.map[w], r)
    A = bits_of(e.avail_row(*x0))
    if not A:
        raise ExtensionError(f"A empty: phi({w}) = {x0[0]} has no unused color-{r} neighbor")
    mode = e.config.mode
    chosen, flagged = None, None
    if mode == "exact":
        forbidden = _tight_forbidden(e, x0)
        ok = [a for a in A if not (forbidden >> a) & 1]
        if ok:
            chosen = _order(e, ok)[0]
    elif mode == "incremental":
        verify_good(e, mode="incremental")
        for a in _order(e, A):
            known_bad = any(
                R + delta_residual(e, (w, r, a), X) < 0 for X, R in e.cache.items() if len(X) <= e.params.bound
            )
            if known_bad:
                continue
            trial = _apply(e.copy(), w, r, u, a)
            if verify_good(trial, mode="incremental").passed:
                chosen = a
                break
    else:
        worst = None
        for a in _order(e, A):
            trial = _apply(e.copy(), w, r, u, a)
            X, R = greedy_violator(trial, e.params.bound)
            if R >= 0:
                chosen = a
                break
            if worst is None or R > worst[1]:
                worst = (a, R, X)
        if chosen is None and e.config.tolerate and worst is not None:
            chosen = worst[0]
            flagged = {"op": "extend", "u": u, "a": worst[0], "residual": worst[1], "X": worst[2]}
    if chosen is None:
        msg = f"no candidate among {A} keeps the embedding good when attaching {u} to {w} in color {r} ({mode})"
        if mode == "exact" and e.config.certified:
            raise InternalInconsistency(msg, {"map": dict(e.map), "target": e.target.to_dict()})
        raise SearchFailure(msg)
    if e.config.mode == "incremental":
        for X in list(e.cache):
            e.cache[X] += delta_residual(e, (w, r, chosen), X)
    _apply(e, w, r, u, chosen)
    if flagged:
        e.flags.append(flagged)
    return e


def _apply(e: Embedding, w: int, r: int, u: int, a: int) -> Embedding:
    check_extension(e, w, r, a)
    e.target.attach(u, w, r)
    e.place(u, a)
    e.log("extend", u=u, w=w, r=r, a=a)
    return e


def _forest_order(e: Embedding, delta) -> list[tuple[int, int, int]]:
    """Breadth-first order of ``(child, parent, color)`` triples hanging below embedded vertices."""
    delta = [tuple(x) for x in delta]
    children: dict[int, list[tuple[int, int, int]]] = {}
    new = set()
    for child, par, c in delta:
        if child in new or child in e.target:
            raise TargetError(f"vertex {child} appears twice or already exists")
        new.add(child)
        children.setdefault(par, []).append((child, par, c))
    for child, par, c in delta:
        if par not in new and par not in e.target:
            raise TargetError(f"parent {par} of {child} is neither embedded nor new")
    order = []
    dq = deque(sorted({p for _, p, _ in delta if p in e.target}))
    while dq:
        p = dq.popleft()
        for trip in children.get(p, []):
            order.append(trip)
            dq.append(trip[0])
    if len(order) != len(delta):
        raise TargetError("the new vertices do not form a forest below the embedded part")
    return order


def extend_forest(e: Embedding, delta) -> Embedding:
    """Embed a forest of new non-root vertices, given as ``(child, parent, color)``."""
    s, D = e.params.s, e.params.D
    order = _forest_order(e, delta)
    _size_check(e, len(e.target) + len(order), 2 * s * D + 3 * s, "forest extension")
    for child, par, c in order:
        extend_vertex(e, par, c, child)
    return e


def add_edge(e: Embedding, h: int, h2: int, r: int) -> Embedding:
    """Add an ``r``-colored target edge between embedded ``h`` and ``h2``; promote both to roots."""
    if h not in e.map or h2 not in e.map:
        raise PreconditionError("both endpoints must be embedded", "embedded")
    if e.target.has_edge(h, h2):
        raise PreconditionError(f"{h} and {h2} are already adjacent", "non-adjacent")
    if not e.host.graphs[r - 1].has_edge(e.map[h], e.map[h2]):
        raise EmbeddingError(f"images {e.map[h]} and {e.map[h2]} are not adjacent in color {r}")
    for x in (h, h2):
        if e.target.color_degree(x, r) >= e.params.D:
            raise PreconditionError(f"deg_{r}({x}) would exceed D = {e.params.D}", "mono degree <= D")
    e.target.add_edge(h, h2, r)
    promoted = e.target.promote(h) + e.target.promote(h2)
    e.log("edge", h=h, h2=h2, r=r, promoted=promoted)
    return e


def remove_leaf(e: Embedding, u: int) -> Embedding:
    """Drop a non-root vertex of total degree 1, or an isolated root."""
    H = e.target
    if u not in H:
        raise PreconditionError(f"{u} is not a target vertex", "present")
    deg = H.degree(u)
    if u in H.roots:
        if deg != 0:
            raise PreconditionError(f"root {u} has degree {deg}; only isolated roots can be removed", "root degree 0")
    elif deg != 1:
        raise PreconditionError(f"non-root {u} has degree {deg}, not 1", "leaf")
    H.remove_vertex(u)
    e.unplace(u)
    e.log("remove", u=u)
    return e


def _complete_tree(top: int, first_color: int, layer_colors: Sequence[int], D: int, fresh):
    """Edge list for ``top - root`` plus a complete ``(D-1)``-ary tree of the given layer colors.

    Returns ``(delta, leaves)``; with no layers the single root is the only leaf.
    """
    root = fresh()
    delta = [(root, top, first_color)]
    layer = [root]
    for c in layer_colors:
        nxt = []
        for par in layer:
            for _ in range(D - 1):
                x = fresh()
                delta.append((x, par, c))
                nxt.append(x)
        layer = nxt
    return delta, layer


def connect_path(
    e: Embedding,
    a: int,
    b: int,
    pattern,
    interior: Sequence[int] | None = None,
    height: int | None = None,
) -> Embedding:
    """Join embedded ``a`` and ``b`` by a path with the given edge colors (read from ``a``).

    Edge positions ``0..L-1``: the stem from ``a`` covers ``0..L-2k-4``, the
    tree hanging from the stem end ``a0`` covers ``L-2k-3..L-k-3`` (attachment
    edge then ``k`` layers), the crossing edge is ``L-k-2``, and the tree
    below ``b`` covers ``L-k-1..L-1`` read backwards from ``b``. Unused tree
    vertices are rolled back in reverse order of creation.
    """
    pattern = pattern if isinstance(pattern, PathPattern) else PathPattern(pattern)
    s, D = e.params.s, e.params.D
    L = len(pattern)
    if D < 3:
        raise PreconditionError(f"path connection needs D >= 3, got {D}", "D >= 3")
    for x in (a, b):
        if x not in e.map:
            raise PreconditionError(f"endpoint {x} is not embedded", "endpoints embedded")
    k = tree_height(s, D)
    if height is not None:
        if e.config.certified and height < k:
            raise PreconditionError(f"tree height {height} < {k} with a certified host", "height >= k")
        k = height
    if L < 2 * k + 3:
        raise PreconditionError(
            f"pattern length {L} is below required_path_length = {2 * k + 3} (s={s}, D={D})",
            "required_path_length",
        )
    if e.target.color_degree(a, pattern[0]) > D - 1 or e.target.color_degree(b, pattern[L - 1]) > D - 1:
        raise PreconditionError("an endpoint already has D edges in its path color", "deg <= D-1 at a, b")
    if interior is not None:
        interior = list(interior)
        if len(interior) != L - 1 or len(set(interior)) != L - 1 or any(v in e.target for v in interior):
            raise TargetError(f"interior ids must be {L - 1} fresh distinct vertices")
    _size_check(e, len(e.target) + L - 1, 4 * s * D + 5 * s, "path connection")

    counter = [max(e.target.vertices + list(interior or []), default=-1) + 1]

    def fresh():
        counter[0] += 1
        return counter[0] - 1

    n_before = len(e.target)
    qlen = L - 2 * k - 3
    stem = [fresh() for _ in range(qlen)]
    a0 = stem[-1] if stem else a
    a_layers = [pattern[qlen + j] for j in range(1, k + 1)]
    b_layers = [pattern[L - 1 - j] for j in range(1, k + 1)]
    da, A_leaves = _complete_tree(a0, pattern[qlen], a_layers, D, fresh)
    db, B_leaves = _complete_tree(b, pattern[L - 1], b_layers, D, fresh)
    scaffold = da + db
    grown = [(x, par, pattern[i]) for i, (x, par) in enumerate(zip(stem, [a] + stem))] + scaffold
    r = pattern[L - k - 2]
    retries = 0 if e.config.certified else e.config.retries
    base_seed = e.config.shuffle_seed
    hit = None
    for attempt in range(retries + 1):
        if attempt:
            # roll everything back and regrow it with a different candidate order
            for child, _, _ in reversed(grown):
                if child in e.target:
                    remove_leaf(e, child)
            e.config.shuffle_seed = (base_seed or 0) + attempt
        try:
            for child, par, c in grown[:qlen]:
                extend_vertex(e, par, c, child)
            extend_forest(e, scaffold)
        except ExtensionError:
            if attempt == retries:
                raise
            continue
        finally:
            e.config.shuffle_seed = base_seed
        peak = len(e.target) - n_before
        hit = _crossing(e, A_leaves, B_leaves, r)
        if hit is not None:
            break
    if hit is None:
        left = sorted(e.map[x] for x in A_leaves)
        right = sorted(e.map[y] for y in B_leaves)
        raise JoinednessViolation(
            f"no color-{r} edge between {left} and {right}; the host is not {len(left)}-joined", left, right
        )
    add_edge(e, hit[0], hit[1], r)
    keep = set(stem)
    for end in hit:
        x = end
        while x not in (a0, b):
            keep.add(x)
            x = _parent_in(scaffold, x)
    removed = 0
    for child, _, _ in reversed(scaffold):
        if child not in keep:
            remove_leaf(e, child)
            removed += 1
    path = _path_between(e.target, a, b, set(stem) | keep)
    if interior is not None:
        for old, new in zip(path[1:-1], interior):
            e.target.relabel(old, new)
            v = e.map.pop(old)
            e.map[new] = v
            e.inv[v] = new
        path = [a] + interior + [b]
    e.log("connect", a=a, b=b, pattern=list(pattern.colors), height=k, crossing=list(hit), peak=peak, attempts=attempt + 1, rolled_back=removed, path=path)
    return e


def _crossing(e: Embedding, A_leaves, B_leaves, r: int):
    """First ``(x, y)`` in host order with ``phi(x) ~ phi(y)`` in color ``r``."""
    for x in sorted(A_leaves, key=lambda h: e.map[h]):
        row = e.host.row(e.map[x], r)
        for y in sorted(B_leaves, key=lambda h: e.map[h]):
            if (row >> e.map[y]) & 1:
                return x, y
    return None


def _parent_in(delta, x):
    for child, par, _ in delta:
        if child == x:
            return par
    raise KeyError(x)


def _path_between(H: RootedColoredGraph, a: int, b: int, inner: set[int]) -> list[int]:
    prev = {a: None}
    dq = deque([a])
    while dq:
        x = dq.popleft()
        if x == b:
            break
        for y in H.neighbors(x):
            if y not in prev and (y in inner or y == b):
                prev[y] = x
                dq.append(y)
    if b not in prev:
        raise InternalInconsistency(f"no {a}-{b} path through the new vertices")
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def new_embedding(host: GraphFamily, params: GoodnessParams, config: EngineConfig | None = None, universe=None) -> Embedding:
    return Embedding(host, RootedColoredGraph(), {}, params, config or EngineConfig(), universe)


def _bfs_delta(tree: RootedColoredGraph, root: int) -> list[tuple[int, int, int]]:
    seen = {root}
    out = []
    dq = deque([root])
    while dq:
        x = dq.popleft()
        for y, c in sorted(tree.neighbors(x).items()):
            if y not in seen:
                seen.add(y)
                out.append((y, x, c))
                dq.append(y)
    return out


def embed_tree_anchored(
    host: GraphFamily,
    tree: RootedColoredGraph,
    h0: int,
    v0: int,
    params: GoodnessParams,
    config: EngineConfig | None = None,
    universe=None,
) -> Embedding:
    """Embed a colored tree with ``h0`` mapped to ``v0`` by repeated vertex extension."""
    comps = tree.components()
    n_edges = len(tree.edges())
    if len(comps) != 1 or n_edges != len(tree) - 1:
        raise TargetError("expected a tree")
    e = new_embedding(host, params, config, universe)
    s, D = params.s, params.D
    _size_check(e, len(tree), 2 * s * D + 3 * s, "anchored tree")
    e.target.add_vertex(h0)
    e.place(h0, v0)
    e.log("anchor", h=h0, v=v0)
    extend_forest(e, _bfs_delta(tree, h0))
    return e


def _extend_chain(e: Embedding, seq: Sequence[int], pattern: PathPattern) -> None:
    if seq[0] not in e.target:
        seq, pattern = list(seq)[::-1], pattern.reversed()
    delta = [(seq[i + 1], seq[i], pattern[i]) for i in range(len(seq) - 1)]
    extend_forest(e, delta)


def embed_path_constructible(
    e: Embedding,
    H: RootedColoredGraph,
    decomposition: PathConstructibleDecomposition,
    height: int | None = None,
) -> Embedding:
    """Grow ``e`` (an embedding of the base) into an embedding of ``H`` path by path."""
    chk = validate_path_constructible(H, decomposition)
    if not chk:
        raise TargetError(f"decomposition invalid: {chk.message}", chk.clause)
    base = decomposition.base
    if set(base.vertices) != set(e.target.vertices):
        raise PreconditionError("the embedding must cover exactly the base graph", "base embedded")
    s, D = e.params.s, e.params.D
    if e.config.certified:
        ell = required_path_length(s, D)
        short = [seq for seq, pat in decomposition.paths if len(pat) < ell]
        if short:
            raise PreconditionError(
                f"path {short[0]} is shorter than required_path_length = {ell}", "required_path_length"
            )
        _size_check(e, len(H), 6 * s * D, "path-constructible embedding")
    for idx, (seq, pat) in enumerate(decomposition.paths):
        if seq[0] in e.target and seq[-1] in e.target:
            connect_path(e, seq[0], seq[-1], pat, interior=seq[1:-1], height=height)
        else:
            _extend_chain(e, seq, pat)
        milestone(e, f"path {idx}")
    if e.target.edge_set() != H.edge_set():
        raise InternalInconsistency("embedded target differs from the requested graph")
    return e
