"""Distance graphs over F_q^d for odd primes q.

Points are indexed by their coordinates read as base-``q`` digits, first
coordinate most significant. ``x ~ y`` in ``G_r`` when
``sum (x_i - y_i)^2 = r (mod q)``; each ``G_r`` is a Cayley graph of
``(F_q^d, +)`` with connection set the sphere of radius ``r``, so its
eigenvalues are the character sums over that sphere.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import sympy

from .bootstrap import embed_subdivision_joined
from .certify import (
    JumbledParams,
    adjacency_spectrum,
    family_jumbled,
    is_joined,
    joined_from_jumbled,
    nontrivial_eigenvalue,
    spectral_jumbled,
)
from .engine import Embedding, EngineConfig, GoodnessParams, revalidate
from .errors import CapExceeded, ExtensionError, GraphError, PreconditionError
from .graphs import Graph, GraphFamily, restrict_family
from .targets import BuiltTarget, PathConstructibleDecomposition, PathPattern, RootedColoredGraph, mono_max_degree, tree_height

DENSE_CAP = 20000
JOINED_SEARCH_CAP = 10**8


def check_field(q: int, d: int) -> None:
    if not (isinstance(q, int) and q > 2 and sympy.isprime(q)):
        raise PreconditionError(f"q = {q} is not an odd prime", "q odd prime")
    if d < 2:
        raise PreconditionError(f"dimension d = {d} must be at least 2", "d >= 2")


@dataclass(frozen=True)
class FieldPoint:
    q: int
    d: int
    coords: tuple[int, ...]

    def __post_init__(self):
        check_field(self.q, self.d)
        object.__setattr__(self, "coords", tuple(int(x) for x in self.coords))
        if len(self.coords) != self.d or any(not 0 <= x < self.q for x in self.coords):
            raise GraphError(f"coordinates {self.coords} are not a point of F_{self.q}^{self.d}")

    @property
    def index(self) -> int:
        return point_index(self.coords, self.q)


@dataclass(frozen=True)
class DistanceGraphSpec:
    q: int
    d: int
    distances: tuple[int, ...]

    def __post_init__(self):
        check_field(self.q, self.d)
        R = tuple(sorted({int(r) % self.q for r in self.distances}))
        if not R:
            raise PreconditionError("the distance set is empty", "R nonempty")
        if 0 in R:
            raise PreconditionError("0 is not a valid distance", "0 not in R")
        object.__setattr__(self, "distances", R)

    def color_of(self, r: int) -> int:
        try:
            return self.distances.index(r % self.q) + 1
        except ValueError:
            raise PreconditionError(f"distance {r} is not in R = {self.distances}", "distances in R") from None


def ff_norm(x, y) -> int:
    """``sum (x_i - y_i)^2 mod q``."""
    if isinstance(x, FieldPoint) and isinstance(y, FieldPoint):
        if (x.q, x.d) != (y.q, y.d):
            raise GraphError(f"points live in different spaces: F_{x.q}^{x.d} and F_{y.q}^{y.d}")
        q = x.q
        return sum((a - b) ** 2 for a, b in zip(x.coords, y.coords)) % q
    raise GraphError("ff_norm expects two FieldPoints")


def all_points(q: int, d: int) -> np.ndarray:
    """``(q^d, d)`` coordinate array in index order."""
    return np.array(list(itertools.product(range(q), repeat=d)), dtype=np.int64)


def point_index(coords, q: int) -> int:
    idx = 0
    for x in coords:
        idx = idx * q + int(x)
    return idx


def sphere(q: int, d: int, r: int) -> np.ndarray:
    """All ``z`` with ``||z|| = r``."""
    P = all_points(q, d)
    return P[(P * P).sum(axis=1) % q == r % q]


def build_distance_graph(q: int, d: int, r: int, cap: int = DENSE_CAP) -> tuple[Graph, np.ndarray]:
    """Distance-``r`` graph on ``F_q^d`` and its coordinate table."""
    check_field(q, d)
    if r % q == 0:
        raise PreconditionError("distance 0 is excluded", "r != 0")
    N = q**d
    if N > cap:
        raise CapExceeded(f"q^d = {N} exceeds the vertex cap {cap}")
    P = all_points(q, d)
    S = sphere(q, d, r)
    weights = q ** np.arange(d - 1, -1, -1, dtype=np.int64)
    nbr = (((P[:, None, :] + S[None, :, :]) % q) * weights).sum(axis=2)  # (N, |S|)
    nbytes = (N + 7) // 8
    bits = np.zeros((N, nbytes), dtype=np.uint8)
    src = np.repeat(np.arange(N), S.shape[0])
    dst = nbr.ravel()
    np.bitwise_or.at(bits, (src, dst >> 3), (1 << (dst & 7)).astype(np.uint8))
    rows = [int.from_bytes(bits[i].tobytes(), "little") for i in range(N)]
    return Graph(N, rows, _checked=True), P


def build_distance_family(spec: DistanceGraphSpec, cap: int = DENSE_CAP) -> GraphFamily:
    """One color per distance, in increasing order of distance."""
    graphs = []
    P = None
    for r in spec.distances:
        g, P = build_distance_graph(spec.q, spec.d, r, cap)
        graphs.append(g)
    for i in range(len(graphs)):
        for j in range(i + 1, len(graphs)):
            for a, b in zip(graphs[i].rows, graphs[j].rows):
                if a & b:
                    raise GraphError("two distance graphs share an edge")
    labels = tuple(tuple(int(x) for x in p) for p in P)
    meta = {"q": spec.q, "d": spec.d, "distances": list(spec.distances)}
    return GraphFamily(tuple(graphs), labels=labels, meta=meta)


def character_eigenvalues(q: int, d: int, r: int) -> np.ndarray:
    """Eigenvalue ``sum_{z in S_r} cos(2 pi a.z / q)`` for every ``a``, in index order."""
    P = all_points(q, d)
    S = sphere(q, d, r)
    dots = (P @ S.T) % q
    return np.cos(2 * np.pi * dots / q).sum(axis=1)


@dataclass
class SpectralReport:
    q: int
    d: int
    r: int
    degree: int
    p: float
    beta: float
    lam: float
    beta_nominal: float

    @property
    def within_bound(self) -> bool:
        return self.beta <= self.beta_nominal + 1e-9

    def params(self) -> JumbledParams:
        return JumbledParams(self.p, self.beta)


def nominal_beta(q: int, d: int) -> float:
    return 2 * q ** ((d - 1) / 2)


def spectral_params(q: int, d: int, r: int, graph: Graph | None = None, spectrum=None) -> SpectralReport:
    """Measured ``p = deg / q^d`` and ``beta = max(lambda, 1)`` next to ``2 q^((d-1)/2)``."""
    g = build_distance_graph(q, d, r)[0] if graph is None else graph
    ev = adjacency_spectrum(g) if spectrum is None else spectrum
    deg, lam = nontrivial_eigenvalue(g, ev)
    jp = spectral_jumbled(g, ev)
    return SpectralReport(q, d, r, deg, jp.p, jp.beta, lam, nominal_beta(q, d))


@dataclass
class ThresholdReport:
    q: int
    d: int
    R_size: int
    epsilon: Fraction
    C_small: sympy.Expr
    C_large: sympy.Expr
    ell_small: int
    ell_large: int
    s: int | None = None
    p: float | None = None
    beta: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "d": self.d,
            "R_size": self.R_size,
            "epsilon": str(self.epsilon),
            "C_small": str(self.C_small),
            "C_small_value": float(self.C_small),
            "C_large": str(self.C_large),
            "C_large_value": float(self.C_large),
            "ell_small": self.ell_small,
            "ell_large": self.ell_large,
            "s": self.s,
            "p": self.p,
            "beta": self.beta,
            "notes": self.notes,
        }


def ceil_log2(q: int) -> int:
    return (q - 1).bit_length()


def c_small(q: int, d: int, R_size: int) -> sympy.Expr:
    """``72 |R|^(1/2) q^((d+1)/2)`` as an exact expression."""
    return 72 * sympy.sqrt(R_size) * sympy.Integer(q) ** sympy.Rational(d + 1, 2)


def c_large(q: int, d: int, R_size: int, epsilon) -> sympy.Expr:
    """``200 |R|^(1/2+eps) q^((1+eps)(d+1)/2)`` as an exact expression."""
    eps = sympy.Rational(Fraction(epsilon).numerator, Fraction(epsilon).denominator)
    half = sympy.Rational(1, 2)
    return 200 * sympy.Integer(R_size) ** (half + eps) * sympy.Integer(q) ** ((1 + eps) * sympy.Rational(d + 1, 2))


def thresholds(q: int, d: int, R, epsilon=Fraction(1, 2), measure: bool = True) -> ThresholdReport:
    """Size and length thresholds, with measured ``p``, ``beta`` and ``s`` when the spectra fit."""
    check_field(q, d)
    eps = Fraction(epsilon)
    if not 0 < eps <= Fraction(1, 2):
        raise PreconditionError(f"epsilon = {eps} must lie in (0, 1/2]", "0 < eps <= 1/2")
    Rs = sorted({int(r) % q for r in R}) if not isinstance(R, int) else None
    R_size = R if isinstance(R, int) else len(Rs)
    rep = ThresholdReport(
        q,
        d,
        R_size,
        eps,
        c_small(q, d, R_size),
        c_large(q, d, R_size, eps),
        (d + 2) * ceil_log2(q) + 16,
        2 * math.ceil(1 / eps) + 16,
    )
    if measure and Rs is not None:
        if q**d > DENSE_CAP:
            rep.notes.append(f"q^d = {q**d} above the dense spectrum cap; p, beta, s not measured")
        else:
            per = [spectral_params(q, d, r).params() for r in Rs]
            fam = family_jumbled(per)
            rep.p, rep.beta = fam.p, fam.beta
            rep.s = joined_from_jumbled(fam)
    return rep


# --- point sets ------------------------------------------------------------------

def read_points(path) -> tuple[int, int, list[tuple[int, ...]]]:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise GraphError("empty point file")
    head = dict(part.split("=") for part in lines[0].replace(" ", "").split(","))
    q, d = int(head["q"]), int(head["d"])
    check_field(q, d)
    pts = []
    for ln in lines[1:]:
        coords = tuple(int(x) % q for x in ln.split(","))
        if len(coords) != d:
            raise GraphError(f"point {ln!r} does not have {d} coordinates")
        pts.append(coords)
    return q, d, pts


def write_points(path, q: int, d: int, points) -> None:
    body = "\n".join(",".join(str(x) for x in p) for p in points)
    Path(path).write_text(f"q={q},d={d}\n{body}\n")


# --- embedding into point sets ------------------------------------------------

@dataclass
class DistanceEmbedding:
    embedding: Embedding
    points: dict[int, tuple[int, ...]]
    s: int
    s_source: str
    realized: list[tuple[int, int, int, int]]
    old_ids: tuple[int, ...]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = self.embedding.to_dict()
        d["points"] = {str(h): list(p) for h, p in sorted(self.points.items())}
        d["realized"] = [list(x) for x in self.realized]
        d["host_ids"] = {str(h): self.old_ids[v] for h, v in sorted(self.embedding.map.items())}
        d["s"] = self.s
        d["s_source"] = self.s_source
        d["notes"] = self.notes
        return d


def distance_violations(points: dict, q: int, d: int, target: RootedColoredGraph, distance_of) -> list[str]:
    """Edges whose realized norm differs from the label; ``distance_of`` maps colors to distances."""
    out = []
    for u, v, c in target.edges():
        want = distance_of(c)
        got = ff_norm(FieldPoint(q, d, points[u]), FieldPoint(q, d, points[v]))
        if got != want:
            out.append(f"edge ({u}, {v}) realizes distance {got}, label {want}")
    return out


def _recolor(target: BuiltTarget, spec: DistanceGraphSpec) -> BuiltTarget:
    """Replace distance labels on edges and paths by color indices."""
    H = target.graph.copy()
    H2 = RootedColoredGraph()
    for v in H.vertices:
        H2.add_vertex(v, root=v in H.roots)
    for u, v, r in H.edges():
        H2.add_edge(u, v, spec.color_of(r))
    H2.parent = {v: (p, spec.color_of(c)) for v, (p, c) in H.parent.items()}
    base = target.decomposition.base
    B2 = RootedColoredGraph()
    for v in base.vertices:
        B2.add_vertex(v, root=v in base.roots)
    for u, v, r in base.edges():
        B2.add_edge(u, v, spec.color_of(r))
    B2.parent = {v: (p, spec.color_of(c)) for v, (p, c) in base.parent.items()}
    paths = [(seq, PathPattern([spec.color_of(r) for r in pat.colors])) for seq, pat in target.decomposition.paths]
    return BuiltTarget(H2, target.branches, PathConstructibleDecomposition(B2, paths))


def working_s(F: GraphFamily, spec: DistanceGraphSpec, s_max: int | None = None, cap: int = JOINED_SEARCH_CAP):
    """Smallest exhaustively certified ``s``, or the spectral value when the search is capped."""
    s_max = F.n if s_max is None else min(s_max, F.n)
    try:
        for s in range(1, s_max + 1):
            if is_joined(F, s, cap=cap).passed:
                return s, "exhaustive"
    except CapExceeded as exc:
        reason = str(exc)
    else:
        reason = f"not joined for any s <= {s_max}"
    per = [spectral_params(spec.q, spec.d, r).params() for r in spec.distances]
    s = joined_from_jumbled(family_jumbled(per))
    warnings.warn(f"exhaustive joinedness unavailable ({reason}); using the spectral value s = {s}")
    return s, "spectral"


def embed_distance_subdivision(
    E,
    spec: DistanceGraphSpec,
    target: BuiltTarget,
    mode: str = "best-effort",
    D: int | None = None,
    s: int | None = None,
    retries: int = 50,
    restarts: int = 20,
) -> DistanceEmbedding:
    """Embed a subdivision whose edge colors are distances into the point set ``E``.

    In best-effort mode the scaffolding trees are lowered to fit the given
    path lengths; the result is then checked for injectivity and distances
    but its goodness is evidence only. A failed uncertified run is restarted
    from scratch with a fresh candidate order up to ``restarts`` times.
    """
    for _, _, r in target.graph.edges():
        spec.color_of(r)
    full = build_distance_family(spec)
    idx = sorted({point_index(p, spec.q) if not isinstance(p, (int, np.integer)) else int(p) for p in E})
    if len(idx) < len(target.graph):
        raise PreconditionError(f"|E| = {len(idx)} is smaller than the target ({len(target.graph)} vertices)", "|E| >= |V(H)|")
    F, old_ids = restrict_family(full, idx)
    notes = []
    if s is None:
        s, source = working_s(F, spec)
    else:
        source = "given"
    colored = _recolor(target, spec)
    D = max(3, mono_max_degree(colored.graph)) if D is None else D
    params = GoodnessParams(s, D)
    certified = source == "exhaustive" and mode == "exact"
    config = EngineConfig(mode=mode, certified=certified, tolerate=mode == "best-effort", retries=0 if certified else retries)
    height = None
    if not certified:
        shortest = min(len(p) for _, p in colored.decomposition.paths)
        k = tree_height(s, D)
        if shortest < 2 * k + 3:
            height = max(0, (shortest - 3) // 2)
            notes.append(f"tree height lowered from {k} to {height} to fit path length {shortest}")
    restarts = 0 if certified else restarts
    for attempt in range(restarts + 1):
        config.shuffle_seed = None if attempt == 0 else 1000 * attempt
        try:
            regions, e = embed_subdivision_joined(F, colored, params, config, height=height)
            break
        except ExtensionError:
            if attempt == restarts:
                raise
    if attempt:
        notes.append(f"succeeded after {attempt} restarts")
    notes.extend(regions.notes)
    if e.flags:
        notes.append(f"{len(e.flags)} extension steps kept a candidate with a known violator")
    labels = F.labels
    points = {h: labels[v] for h, v in e.map.items()}
    realized = []
    for u, v, c in e.target.edges():
        got = ff_norm(FieldPoint(spec.q, spec.d, points[u]), FieldPoint(spec.q, spec.d, points[v]))
        realized.append((u, v, spec.distances[c - 1], got))
    bad = revalidate(e) + distance_violations(points, spec.q, spec.d, e.target, lambda c: spec.distances[c - 1])
    if bad:
        raise PreconditionError(f"embedding failed revalidation: {bad[0]}", "revalidation")
    return DistanceEmbedding(e, points, s, source, realized, old_ids, notes)
