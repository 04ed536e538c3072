"""Embeddings of rooted colored targets into graph families, and their residuals.

For a colored host set ``X`` the residual is

    R(X) = |Gamma(X) - image| - sum_{(v,i) in X} w(v, i)

with weight ``w(v, i) = D - deg_{H_i}(phi^-1 v) + [(v, i) is a parent pair]``
(degree 0 for host vertices outside the image). All neighborhoods are taken
inside the embedding's universe, so an embedding can live in an induced
subfamily without re-indexing the host.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from ..errors import EmbeddingError, PreconditionError
from ..graphs import GraphFamily, bits_of
from ..targets import RootedColoredGraph

MODES = ("exact", "incremental", "best-effort")


@dataclass(frozen=True)
class GoodnessParams:
    s: int
    D: int

    def __post_init__(self):
        if self.s < 1 or self.D < 1:
            raise PreconditionError(f"need s >= 1 and D >= 1, got s={self.s}, D={self.D}", "s, D >= 1")

    @property
    def bound(self) -> int:
        """Size bound ``2s`` at which the engine maintains goodness."""
        return 2 * self.s


@dataclass
class EngineConfig:
    """How extension steps choose and check candidates.

    ``certified`` records that the host is known to be ``s``-joined: the
    size hypotheses of the extension steps are then enforced and an
    exhausted exact candidate search is an internal inconsistency.
    ``tolerate`` lets best-effort runs continue past candidates that fail
    the violator search (the least-bad one is kept and the step is flagged).
    ``retries`` regrows the scaffolding of an uncertified path connection
    with fresh candidate orders when no crossing edge turns up.
    """

    mode: str = "exact"
    cap: int = 10**8
    certified: bool = False
    shuffle_seed: int | None = None
    tolerate: bool = False
    milestones: bool = False
    retries: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


class Embedding:
    """Injective map from target vertices to host vertices, mutated in place."""

    def __init__(
        self,
        host: GraphFamily,
        target: RootedColoredGraph | None = None,
        mapping: dict | None = None,
        params: GoodnessParams | None = None,
        config: EngineConfig | None = None,
        universe: Iterable[int] | None = None,
    ):
        self.host = host
        self.target = RootedColoredGraph() if target is None else target
        self.map: dict[int, int] = dict(mapping or {})
        self.params = params or GoodnessParams(1, 1)
        self.config = config or EngineConfig()
        full = (1 << host.n) - 1
        self.universe = full if universe is None else _mask(universe)
        self.steps: list[dict] = []
        self.flags: list[dict] = []
        self.cache: dict[frozenset, int] = {}
        self._rebuild()

    def _rebuild(self):
        self.inv = {}
        for h, v in self.map.items():
            if v in self.inv:
                raise EmbeddingError(f"target vertices {self.inv[v]} and {h} share host vertex {v}")
            self.inv[v] = h
        self.img = _mask(self.map.values())

    def copy(self) -> "Embedding":
        e = Embedding.__new__(Embedding)
        e.host = self.host
        e.target = self.target.copy()
        e.map = dict(self.map)
        e.inv = dict(self.inv)
        e.img = self.img
        e.params = self.params
        e.config = self.config
        e.universe = self.universe
        e.steps = list(self.steps)
        e.flags = list(self.flags)
        e.cache = dict(self.cache)
        return e

    # bookkeeping ----------------------------------------------------------

    def place(self, h: int, v: int) -> None:
        if v in self.inv:
            raise EmbeddingError(f"host vertex {v} already hosts {self.inv[v]}")
        if not (self.universe >> v) & 1:
            raise EmbeddingError(f"host vertex {v} lies outside the universe")
        self.map[h] = v
        self.inv[v] = h
        self.img |= 1 << v

    def unplace(self, h: int) -> None:
        v = self.map.pop(h)
        del self.inv[v]
        self.img &= ~(1 << v)

    def log(self, op: str, **kw) -> None:
        self.steps.append({"op": op, **kw})

    @property
    def n_universe(self) -> int:
        return self.universe.bit_count()

    def parent_pairs(self) -> set[tuple[int, int]]:
        return {(self.map[h], c) for h, (_, c) in self.target.parent.items()}

    def universe_pairs(self) -> list[tuple[int, int]]:
        t = self.host.t
        return [(v, c) for v in bits_of(self.universe) for c in range(1, t + 1)]

    def avail_row(self, v: int, c: int) -> int:
        """Neighbors of ``v`` in color ``c`` inside the universe and off the image."""
        return self.host.row(v, c) & self.universe & ~self.img

    def weight(self, v: int, c: int, pp: set | None = None) -> int:
        h = self.inv.get(v)
        deg = 0 if h is None else self.target.color_degree(h, c)
        pp = self.parent_pairs() if pp is None else pp
        return self.params.D - deg + ((v, c) in pp)

    def weights(self) -> dict[tuple[int, int], int]:
        pp = self.parent_pairs()
        return {(v, c): self.weight(v, c, pp) for v, c in self.universe_pairs()}

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "map": {str(h): v for h, v in sorted(self.map.items())},
            "params": {"s": self.params.s, "D": self.params.D},
            "mode": self.config.mode,
            "universe": bits_of(self.universe),
            "target": self.target.to_dict(),
            "steps": self.steps,
            "flags": self.flags,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, d: dict, host: GraphFamily, target: RootedColoredGraph | None = None) -> "Embedding":
        target = RootedColoredGraph.from_dict(d["target"]) if target is None else target
        p = d.get("params", {"s": 1, "D": 1})
        e = cls(
            host,
            target,
            {int(h): int(v) for h, v in d["map"].items()},
            GoodnessParams(p["s"], p["D"]),
            EngineConfig(mode=d.get("mode", "exact")),
            universe=d.get("universe"),
        )
        e.steps = list(d.get("steps", []))
        e.flags = list(d.get("flags", []))
        return e

    def __repr__(self):
        return f"Embedding(|H|={len(self.target)}, mapped={len(self.map)}, s={self.params.s}, D={self.params.D})"


def _mask(vs) -> int:
    m = 0
    for v in vs:
        m |= 1 << int(v)
    return m


def residual(e: Embedding, X, params: GoodnessParams | None = None) -> int:
    """Residual of the colored host set ``X`` under ``e``."""
    X = set(map(tuple, X))
    D = (params or e.params).D
    pp = e.parent_pairs()
    cov = 0
    wsum = 0
    for v, c in X:
        cov |= e.host.row(v, c)
        h = e.inv.get(v)
        deg = 0 if h is None else e.target.color_degree(h, c)
        wsum += D - deg + ((v, c) in pp)
    cov &= e.universe & ~e.img
    return cov.bit_count() - wsum


def check_extension(e: Embedding, w: int, r: int, a: int) -> None:
    """Raise unless attaching a new child of ``w`` at ``a`` via color ``r`` is legal."""
    if w not in e.map:
        raise PreconditionError(f"target vertex {w} is not embedded", "w embedded")
    if a in e.inv:
        raise PreconditionError(f"host vertex {a} is already used", "a unused")
    if not (e.universe >> a) & 1:
        raise PreconditionError(f"host vertex {a} lies outside the universe", "a in universe")
    if not (e.host.row(e.map[w], r) >> a) & 1:
        raise PreconditionError(f"{a} is not a color-{r} neighbor of {e.map[w]}", "a ~ phi(w)")
    if e.target.color_degree(w, r) >= e.params.D:
        raise PreconditionError(f"deg_{r}({w}) already equals D = {e.params.D}", "deg < D")


def delta_residual(e: Embedding, extension: tuple[int, int, int], X) -> int:
    """``R(X, phi_a) - R(X, phi)`` for attaching a child of ``w`` at ``a`` via color ``r``."""
    w, r, a = extension
    check_extension(e, w, r, a)
    X = set(map(tuple, X))
    in_x = (e.map[w], r) in X
    gam = 0
    for v, c in X:
        gam |= e.host.row(v, c)
    in_gamma = bool((gam & e.universe) >> a & 1)
    return int(in_x) - int(in_gamma)


def revalidate(e: Embedding, labels_check=None) -> list[str]:
    """Every problem with the map: injectivity, universe, edge colors, parent bookkeeping.

    Returns an empty list when the embedding is sound.
    """
    problems = []
    seen: dict[int, int] = {}
    H = e.target
    for h in H.vertices:
        if h not in e.map:
            problems.append(f"target vertex {h} is unmapped")
    for h, v in e.map.items():
        if h not in H:
            problems.append(f"map entry for unknown target vertex {h}")
        if not 0 <= v < e.host.n:
            problems.append(f"target vertex {h} maps outside the host ({v})")
            continue
        if v in seen:
            problems.append(f"target vertices {seen[v]} and {h} both map to {v}")
        seen[v] = h
        if not (e.universe >> v) & 1:
            problems.append(f"target vertex {h} maps outside the universe ({v})")
    for u, v, c in H.edges():
        if u in e.map and v in e.map and 0 <= e.map[u] < e.host.n and 0 <= e.map[v] < e.host.n:
            if not e.host.graphs[c - 1].has_edge(e.map[u], e.map[v]):
                problems.append(f"edge ({u}, {v}) of color {c} maps to non-edge ({e.map[u]}, {e.map[v]})")
    if e.inv != {v: h for h, v in e.map.items()} or e.img != _mask(e.map.values()):
        problems.append("cached inverse map is stale")
    try:
        H.validate(max_color=e.host.t)
    except Exception as exc:  # target invariants are reported, not raised
        problems.append(f"target invalid: {exc}")
    if labels_check is not None:
        problems.extend(labels_check(e))
    return problems
