"""Initial good embeddings and the end-to-end embedding pipelines.

An ``s``-joined family may have vertices that expand badly, so the empty
embedding need not be good. Carving removes a small blocker ``U0`` and
reserves an expansion buffer ``Y0``; any placement of roots into the rest
(``W``) is then good inside ``V'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .certify import JumbledParams
from .engine import (
    Embedding,
    connect_path,
    EngineConfig,
    GoodnessParams,
    embed_path_constructible,
    extend_forest,
    milestone,
    new_embedding,
)
from .errors import CapExceeded, JoinednessViolation, PreconditionError, TargetError
from .graphs import GraphFamily, bits_of
from .targets import BuiltTarget, RootedColoredGraph, mono_max_degree, required_path_length, star_forest_of

BLOCKER_NODE_CAP = 10**7


@dataclass
class CarvedRegions:
    blocker: list[tuple[int, int]]
    V_prime: list[int]
    W: list[int]
    Y0: list[int]
    notes: list[str] = field(default_factory=list)

    def check(self, n: int, s: int, D: int) -> None:
        """Raise if any size or containment invariant fails."""
        U0v = {v for v, _ in self.blocker}
        if len(self.blocker) > s:
            raise PreconditionError(f"|U0| = {len(self.blocker)} > s = {s}", "|U0| <= s")
        if set(self.V_prime) != set(range(n)) - U0v:
            raise PreconditionError("V' must be V minus the blocker's vertices", "V' = V - U0|V")
        if set(self.W) != set(self.V_prime) - set(self.Y0):
            raise PreconditionError("W must be V' minus Y0", "W = V' - Y0")
        if len(self.V_prime) < n - s:
            raise PreconditionError(f"|V'| = {len(self.V_prime)} < n - s", "|V'| >= n - s")
        if len(self.W) < n - 3 * s * D - 5 * s:
            raise PreconditionError(f"|W| = {len(self.W)} < n - 3sD - 5s", "|W| >= n - 3sD - 5s")

    def to_dict(self) -> dict:
        return {
            "blocker": [list(x) for x in self.blocker],
            "V_prime": self.V_prime,
            "W": self.W,
            "Y0": self.Y0,
            "notes": self.notes,
        }


def _mask(vs) -> int:
    m = 0
    for v in vs:
        m |= 1 << v
    return m


def _find_weak_set(F: GraphFamily, Ymask: int, excluded: set, bound: int, D: int, node_cap: int):
    """A nonempty ``X`` avoiding ``excluded`` with ``|X| <= bound`` and ``|N*(X, Y)| < D|X|``.

    ``N*(X, Y)`` is the neighborhood inside ``Y`` minus the vertices of ``X``.
    Extending by ``z`` costs at most one vertex of ``N*`` and ``D`` of budget,
    which bounds every branch.
    """
    els = [(v, c) for v in range(F.n) for c in range(1, F.t + 1) if (v, c) not in excluded]
    rows = [F.row(v, c) & Ymask for v, c in els]
    vbits = [1 << v for v, _ in els]
    chosen: list[int] = []
    nodes = [0]

    def rec(start, nb, xv):
        for i in range(start, len(els)):
            nodes[0] += 1
            if nodes[0] > node_cap:
                raise CapExceeded(f"blocker search visited more than {node_cap} sets")
            nb2 = nb | rows[i]
            xv2 = xv | vbits[i]
            k = len(chosen) + 1
            g = (nb2 & ~xv2).bit_count() - D * k
            chosen.append(i)
            if g < 0:
                return True
            slots = bound - k
            if slots > 0 and g - (D + 1) * slots < 0 and rec(i + 1, nb2, xv2):
                return True
            chosen.pop()
        return False

    if rec(0, 0, 0):
        return [els[i] for i in chosen]
    return None


def find_blocker(
    F: GraphFamily,
    Y0,
    params: GoodnessParams,
    strict: bool = True,
    node_cap: int = BLOCKER_NODE_CAP,
) -> list[tuple[int, int]]:
    """Absorb weakly expanding colored sets until none remains outside the blocker.

    Smaller weak sets are absorbed first.

    Every absorbed union keeps ``|N*(U0, Y0)| < D|U0|``; for an ``s``-joined
    host this forces ``|U0| <= s``. Exceeding ``s`` is reported as a
    joinedness violation together with the absorption trace.
    """
    s, D = params.s, params.D
    Y0 = sorted(set(Y0))
    if strict and len(Y0) < 3 * s * D + 4 * s:
        raise PreconditionError(f"|Y0| = {len(Y0)} < 3sD + 4s = {3 * s * D + 4 * s}", "|Y0| >= 3sD + 4s")
    F.check_vertices(Y0)
    Ymask = _mask(Y0)
    U0: list[tuple[int, int]] = []
    trace = []
    while True:
        used_v = {v for v, _ in U0}
        Y = Ymask & ~_mask(used_v)
        X = None
        for b in range(1, 2 * s + 1):
            X = _find_weak_set(F, Y, set(U0), b, D, node_cap)
            if X is not None:
                break
        if X is None:
            return sorted(U0)
        U0.extend(X)
        trace.append(X)
        if len(U0) > s:
            raise JoinednessViolation(
                f"blocker grew to {len(U0)} > s = {s}; the family is not {s}-joined (trace {trace})",
                left=U0,
                right=Y0,
            )


def carve_regions(
    F: GraphFamily,
    params: GoodnessParams,
    anchors=(),
    strict: bool = True,
    node_cap: int = BLOCKER_NODE_CAP,
) -> CarvedRegions:
    """Blocker ``U0``, ``V' = V - U0|V`` and ``W = V' - Y0`` with ``Y0`` the lowest free vertices."""
    s, D = params.s, params.D
    n = F.n
    if n <= s:
        raise PreconditionError(f"n = {n} must exceed s = {s}", "n > s")
    size = 3 * s * D + 4 * s
    pool = [v for v in range(n) if v not in set(anchors)]
    if size > len(pool):
        raise PreconditionError(f"Y0 needs {size} vertices but only {len(pool)} are free", "|Y0| = 3sD + 4s <= n")
    Y0 = pool[:size]
    U0 = find_blocker(F, Y0, params, strict=strict, node_cap=node_cap)
    U0v = {v for v, _ in U0}
    Vp = [v for v in range(n) if v not in U0v]
    W = [v for v in Vp if v not in set(Y0)]
    regions = CarvedRegions(U0, Vp, W, Y0)
    regions.check(n, s, D)
    return regions


def trivial_regions(F: GraphFamily, note: str) -> CarvedRegions:
    """``V' = W = V``: used when carving is impossible and goodness is not being claimed."""
    V = list(range(F.n))
    return CarvedRegions([], V, V, [], [note])


def regions_for(F: GraphFamily, params: GoodnessParams, config: EngineConfig, anchors=()) -> CarvedRegions:
    """Carve when possible; uncertified runs fall back to the whole vertex set."""
    try:
        return carve_regions(F, params, anchors)
    except (PreconditionError, CapExceeded, JoinednessViolation) as exc:
        if config.certified:
            raise
        return trivial_regions(F, f"carving skipped: {exc}")


# --- jumbled helpers -----------------------------------------------------------

def mono_degrees(F: GraphFamily, v: int, within: int) -> list[int]:
    return [(F.row(v, c) & within).bit_count() for c in range(1, F.t + 1)]


def min_mono_degree_vertex(
    F: GraphFamily,
    c: float,
    params: JumbledParams,
    within=None,
    check: bool = True,
) -> int:
    """Lowest vertex whose degree in every color is at least ``(1-c) p |V|``.

    ``within`` restricts the family to an induced vertex subset.
    """
    if not 0 < c < 1:
        raise PreconditionError(f"c = {c} must lie in (0, 1)", "0 < c < 1")
    verts = list(range(F.n)) if within is None else sorted(within)
    N = len(verts)
    mask = _mask(verts)
    need_n = math.sqrt(F.t) * params.beta / (c * params.p)
    if check and N < need_n:
        raise PreconditionError(
            f"|V| = {N} < c^-1 t^1/2 beta / p = {need_n:.3f}", "|V| >= c^-1 t^1/2 beta p^-1"
        )
    thresh = (1 - c) * params.p * N
    best = None
    for v in verts:
        degs = mono_degrees(F, v, mask)
        if min(degs) >= thresh:
            return v
        if best is None or min(degs) > best[1]:
            best = (v, min(degs))
    raise PreconditionError(
        f"no vertex has all color degrees >= {thresh:.3f}; best min degree {best[1] if best else None} at {best and best[0]}",
        "min mono degree",
    )


def jumbled_s(F: GraphFamily, params: JumbledParams) -> int:
    """Integer working value of ``s = 2 t^1/2 beta / p`` (rounded up)."""
    return math.ceil(2 * math.sqrt(F.t) * params.beta / params.p - 1e-12)


def embed_star_forest(
    F: GraphFamily,
    forest: RootedColoredGraph,
    c: float,
    params: JumbledParams,
    D: int = 3,
    config: EngineConfig | None = None,
    s: int | None = None,
    centers=None,
) -> tuple[CarvedRegions, Embedding]:
    """Place stars greedily on high mono-degree vertices of ``W``; every vertex is a root.

    ``centers`` defaults to the vertices of degree at least 2 plus the lower
    end of every isolated edge.
    """
    config = config or EngineConfig(certified=True)
    s = jumbled_s(F, params) if s is None else s
    gp = GoodnessParams(s, D)
    n = F.n
    if centers is None:
        centers = [v for v in forest.vertices if forest.degree(v) > 1 or (forest.degree(v) == 1 and _is_center(forest, v))]
    Delta = max((forest.degree(v) for v in forest.vertices), default=0)
    if Delta > (1 - c) * params.p * n:
        raise PreconditionError(f"Delta = {Delta} > (1-c) p n = {(1 - c) * params.p * n:.3f}", "Delta <= (1-c) p n")
    if len(forest) + 5 * s * D >= c * n / 2:
        raise PreconditionError(
            f"|V(F)| + 5sD = {len(forest) + 5 * s * D} is not below c n / 2 = {c * n / 2:.3f}", "|V(F)| + 5sD < cn/2"
        )
    regions = regions_for(F, gp, config)
    e = new_embedding(F, gp, config, universe=regions.V_prime)
    free = set(regions.W)
    for center in sorted(centers):
        v = min_mono_degree_vertex(F, c / 2, params, within=free)
        leaves = sorted(forest.neighbors(center).items())
        free.discard(v)
        e.target.add_vertex(center)
        e.place(center, v)
        for leaf, col in leaves:
            opts = [u for u in bits_of(F.row(v, col)) if u in free]
            if not opts:
                raise PreconditionError(
                    f"center {center} at {v} has no unused color-{col} neighbor in W", "enough neighbors"
                )
            u = opts[0]
            free.discard(u)
            e.target.add_vertex(leaf)
            e.place(leaf, u)
            e.target.add_edge(center, leaf, col)
        e.log("star", center=center, v=v, leaves=[leaf for leaf, _ in leaves])
    for v in forest.vertices:
        if v not in e.target:
            e.target.add_vertex(v)
            e.place(v, min(free))
            free.discard(e.map[v])
    return regions, e


def _is_center(forest: RootedColoredGraph, v: int) -> bool:
    """A degree-1 vertex is a center when its neighbor is also a leaf and has the larger id."""
    (u,) = forest.neighbors(v)
    return forest.degree(u) == 1 and v < u


# --- joined pipelines ----------------------------------------------------------

def _check_lengths(decomposition, ell: int, config: EngineConfig) -> None:
    short = [len(p) for _, p in decomposition.paths if len(p) < ell]
    if short and config.certified:
        raise PreconditionError(f"path length {min(short)} is below required_path_length = {ell}", "required_path_length")


def embed_rooted_forest_anchored(
    F: GraphFamily,
    H: RootedColoredGraph,
    decomposition,
    anchors: dict,
    params: GoodnessParams,
    config: EngineConfig | None = None,
    regions: CarvedRegions | None = None,
    height: int | None = None,
) -> tuple[CarvedRegions, Embedding]:
    """Anchor the base roots, grow the base forest, then add the paths."""
    config = config or EngineConfig()
    s, D = params.s, params.D
    base = decomposition.base
    if set(anchors) != set(base.roots):
        raise PreconditionError("anchors must be given for exactly the base roots", "anchors = roots")
    if len(set(anchors.values())) != len(anchors):
        raise PreconditionError("anchor images must be distinct", "distinct anchors")
    _check_lengths(decomposition, required_path_length(s, D), config)
    if config.certified and len(H) > F.n - 6 * s * D:
        raise PreconditionError(f"|V(H)| = {len(H)} > n - 6sD = {F.n - 6 * s * D}", "|V(H)| <= n - 6sD")
    regions = regions_for(F, params, config, anchors.values()) if regions is None else regions
    W = set(regions.W)
    for h, v in anchors.items():
        if v not in W:
            raise PreconditionError(f"anchor {v} for {h} lies outside W", "anchors in W")
    e = new_embedding(F, params, config, universe=regions.V_prime)
    for h in sorted(anchors):
        e.target.add_vertex(h)
        e.place(h, anchors[h])
    e.log("anchor", anchors={str(h): v for h, v in sorted(anchors.items())})
    milestone(e, "anchors")
    delta = [(h, p, c) for h, (p, c) in base.parent.items()]
    if delta:
        extend_forest(e, delta)
        milestone(e, "base forest")
    for u, v, c in base.edges():
        if not e.target.has_edge(u, v):
            raise TargetError(f"base edge ({u}, {v}) is not a tree edge; the base must be a rooted forest")
    embed_path_constructible(e, H, decomposition, height=height)
    return regions, e


def _auto_anchors(base: RootedColoredGraph, W: list[int]) -> dict:
    roots = sorted(base.roots)
    if len(W) < len(roots):
        raise PreconditionError(f"W has {len(W)} vertices for {len(roots)} anchors", "|W| >= roots")
    return dict(zip(roots, W))


def embed_subdivision_joined(
    F: GraphFamily,
    target: BuiltTarget,
    params: GoodnessParams,
    config: EngineConfig | None = None,
    height: int | None = None,
) -> tuple[CarvedRegions, Embedding]:
    """Branch vertices go to the lowest vertices of ``W``; paths are then connected."""
    config = config or EngineConfig()
    H = target.graph
    s, D = params.s, params.D
    if mono_max_degree(H) > D:
        raise PreconditionError(f"mono degree {mono_max_degree(H)} exceeds D = {D}", "mono degree <= D")
    _check_lengths(target.decomposition, required_path_length(s, D), config)
    if config.certified and len(H) > F.n - 6 * s * D:
        raise PreconditionError(f"|V(H)| = {len(H)} > n - 6sD = {F.n - 6 * s * D}", "|V(H)| <= n - 6sD")
    regions = regions_for(F, params, config)
    anchors = _auto_anchors(target.decomposition.base, regions.W)
    return embed_rooted_forest_anchored(F, H, target.decomposition, anchors, params, config, regions, height)


def embed_expansion_joined(
    F: GraphFamily,
    target: BuiltTarget,
    params: GoodnessParams,
    config: EngineConfig | None = None,
    height: int | None = None,
) -> tuple[CarvedRegions, Embedding]:
    """One anchored root per branch tree; trees by forest extension, then the paths."""
    return embed_subdivision_joined(F, target, params, config, height)


def embed_subdivision_jumbled(
    F: GraphFamily,
    target: BuiltTarget,
    c: float,
    params: JumbledParams,
    D: int = 3,
    config: EngineConfig | None = None,
) -> tuple[CarvedRegions, Embedding]:
    """Embed branch stars by degree, then join leaf pairs by path connection.

    Each branch path ``b_i, x_1, ..., x_{L-1}, b_j`` becomes a connection from
    ``x_1`` to ``x_{L-1}`` of length ``L - 2``; the branch centers are never
    extended again.
    """
    config = config or EngineConfig(certified=True)
    H = target.graph
    n = F.n
    s = jumbled_s(F, params)
    gp = GoodnessParams(s, D)
    lengths = [len(p) for _, p in target.decomposition.paths]
    ell = min(lengths)
    if not 8 / ell < c < 1:
        raise PreconditionError(f"need 8/ell < c < 1 with ell = {ell}, got c = {c}", "8/ell < c < 1")
    Delta = max(H.degree(v) for v in H.vertices)
    if Delta > (1 - c) * params.p * n:
        raise PreconditionError(f"Delta = {Delta} > (1-c) p n", "Delta <= (1-c) p n")
    if config.certified and len(H) > n - 6 * s * D:
        raise PreconditionError(f"|V(H)| = {len(H)} > n - 6sD = {n - 6 * s * D}", "|V(H)| <= n - 6sD")
    if Delta * (Delta + 1) > c * n / 2 - 5 * s * D:
        raise PreconditionError(
            f"Delta(Delta+1) = {Delta * (Delta + 1)} > c n/2 - 5sD = {c * n / 2 - 5 * s * D:.3f}",
            "Delta(Delta+1) <= cn/2 - 5sD",
        )
    k_need = required_path_length(s, D)
    if config.certified and ell - 2 < k_need:
        raise PreconditionError(
            f"leaf-to-leaf paths have length {ell - 2} < required_path_length = {k_need}", "required_path_length"
        )
    forest = star_forest_of(H, target.branches)
    regions, e = embed_star_forest(F, forest, c, params, D, config, s, centers=target.branches)
    milestone(e, "star forest")
    for idx, (seq, pat) in enumerate(target.decomposition.paths):
        inner = seq[1:-1]
        if len(inner) == 1:
            continue
        connect_path(e, inner[0], inner[-1], pat.colors[1:-1], interior=inner[1:-1])
        milestone(e, f"path {idx}")
    if e.target.edge_set() != H.edge_set():
        raise TargetError("embedded graph differs from the target")
    return regions, e
