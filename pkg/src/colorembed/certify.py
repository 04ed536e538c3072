"""Joinedness and jumbledness certificates for graph families.

All checks are phrased on the auxiliary bipartite graph: a family is
``s``-joined when every ``X`` in ``V x [t]`` and ``Y`` in ``V`` with
``|X|, |Y| >= s`` span an edge, and ``(p, beta)``-jumbled when
``|e(X, Y) - p|X||Y|| <= beta sqrt(|X||Y|)`` for all such pairs.
``X`` and ``Y`` are not required to be disjoint.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, GraphError, PreconditionError
from .graphs import Graph, GraphFamily, bits_of, build_auxiliary

EIG_TOL = 1e-9
JUMBLE_TOL = 1e-9
P_MATCH_TOL = 1e-12

JOINED_CAP = int(os.environ.get("COLOREMBED_JOINED_CAP", 10**8))
JUMBLED_MAX_RIGHT = int(os.environ.get("COLOREMBED_JUMBLED_MAX_N", 16))
JUMBLED_MAX_LEFT = int(os.environ.get("COLOREMBED_JUMBLED_MAX_NT", 64))
DEFAULT_SAMPLES = 10**6
DEFAULT_SEED = 0


@dataclass(frozen=True)
class JumbledParams:
    p: float
    beta: float

    def __post_init__(self):
        if not (0 < self.p < 1 <= self.beta):
            raise ValueError(f"need 0 < p < 1 <= beta, got p={self.p}, beta={self.beta}")


@dataclass
class CertReport:
    verdict: str
    method: str
    measured: float | None = None
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def certifying(self) -> bool:
        """Sampled reports are evidence only."""
        return self.method != "sampled"

    def to_dict(self) -> dict:
        d = {"verdict": self.verdict, "method": self.method, "certifying": self.certifying}
        if self.measured is not None:
            d["measured"] = float(self.measured)
        if self.witness is not None:
            d["witness"] = self.witness
        if self.details:
            d["details"] = self.details
        return d


def _left_rows(F: GraphFamily):
    pairs = F.pairs()
    return pairs, [F.row(v, c) for v, c in pairs]


# --- joinedness ----------------------------------------------------------------

def _find_unjoined(rows: list[int], n: int, s: int):
    """First size-``s`` index set whose non-neighborhood has ``>= s`` vertices.

    A prefix whose non-neighborhood already has ``< s`` vertices cannot be
    completed into a violator, so that branch is cut.
    """
    N = len(rows)
    chosen: list[int] = []

    def rec(start: int, union: int) -> bool:
        missing = n - union.bit_count()
        if missing < s:
            return False
        if len(chosen) == s:
            return True
        need = s - len(chosen)
        for i in range(start, N - need + 1):
            chosen.append(i)
            if rec(i + 1, union | rows[i]):
                return True
            chosen.pop()
        return False

    return list(chosen) if rec(0, 0) else None


def is_joined(F: GraphFamily, s: int, cap: int | None = None) -> CertReport:
    """Exact ``s``-joinedness test.

    Passes iff every ``X`` with ``|X| = s`` has ``|V - Gamma(X)| < s``; a pair
    with no edge between them forces ``Y`` inside ``V - Gamma(X)``, and larger
    ``X`` only shrink that set.
    """
    if s < 1:
        raise PreconditionError("s must be a positive integer", "s >= 1")
    if s > F.n:
        raise PreconditionError(f"s = {s} exceeds n = {F.n}", "s <= n")
    cap = JOINED_CAP if cap is None else cap
    pairs, rows = _left_rows(F)
    total = math.comb(len(pairs), s)
    if total > cap:
        raise CapExceeded(f"C({len(pairs)}, {s}) = {total} subsets exceeds cap {cap}")
    found = _find_unjoined(rows, F.n, s)
    if found is None:
        return CertReport("pass", "exhaustive", details={"s": s, "subsets": total})
    X = [pairs[i] for i in found]
    union = 0
    for i in found:
        union |= rows[i]
    Y = bits_of(((1 << F.n) - 1) & ~union)
    return CertReport(
        "fail",
        "exhaustive",
        witness={"X": [list(x) for x in X], "Y": Y},
        details={"s": s, "subsets": total},
    )


def min_joined(F: GraphFamily, cap: int, subset_cap: int | None = None) -> int | None:
    """Smallest ``s <= cap`` at which ``F`` is ``s``-joined, or ``None``.

    Joinedness is monotone in ``s``, so an upward linear scan is exact.
    """
    if cap < 1:
        raise PreconditionError("cap must be positive", "cap >= 1")
    for s in range(1, min(cap, F.n) + 1):
        if is_joined(F, s, cap=subset_cap).passed:
            return s
    return None


# --- jumbledness ---------------------------------------------------------------

def _deficit_table(M: np.ndarray, ysize: np.ndarray, p: float):
    """Max normalized deficit for each ``Y`` row of ``M`` (degrees into ``Y``).

    For fixed ``Y`` and ``|X| = k``, ``e(X, Y)`` is a sum of ``k`` entries of
    the row, so its extremes are the ``k`` smallest and ``k`` largest entries.
    """
    Ms = np.sort(M, axis=1)
    low = np.cumsum(Ms, axis=1)
    high = np.cumsum(Ms[:, ::-1], axis=1)
    ks = np.arange(1, M.shape[1] + 1)
    expected = p * ks[None, :] * ysize[:, None]
    norm = np.sqrt(ks[None, :] * ysize[:, None])
    dev_low = np.abs(low - expected) / norm
    dev_high = np.abs(high - expected) / norm
    return dev_low, dev_high


def _exhaustive_jumbled(F: GraphFamily, p: float, chunk: int = 4096):
    aux = build_auxiliary(F)
    A = aux.biadjacency().astype(np.int64)  # (nt, n)
    n, nt = F.n, A.shape[0]
    shifts = np.arange(n, dtype=np.int64)
    best = -1.0
    arg = None
    for start in range(1, 1 << n, chunk):
        ys = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        Ybits = ((ys[:, None] >> shifts[None, :]) & 1).astype(np.int64)
        ysize = Ybits.sum(axis=1)
        M = Ybits @ A.T
        dev_low, dev_high = _deficit_table(M, ysize, p)
        for side, dev in (("low", dev_low), ("high", dev_high)):
            idx = np.unravel_index(np.argmax(dev), dev.shape)
            if dev[idx] > best:
                best = float(dev[idx])
                b, k = int(idx[0]), int(idx[1]) + 1
                order = np.argsort(M[b], kind="stable")
                if side == "high":
                    order = order[::-1]
                arg = (int(ys[b]), [int(i) for i in order[:k]])
    ymask, xs = arg
    X = [aux.left[i] for i in xs]
    Y = bits_of(ymask)
    return best, X, Y, aux


def jumbled_check(
    F: GraphFamily,
    params: JumbledParams,
    mode: str = "exhaustive",
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    max_right: int | None = None,
    max_left: int | None = None,
) -> CertReport:
    """Check ``(p, beta)``-jumbledness of ``F``.

    ``exhaustive`` maximizes the normalized deficit over every pair of
    nonempty ``X``, ``Y`` (exact, a proof); ``sampled`` draws random pairs and
    is evidence only. ``measured`` is ``max |e - p|X||Y|| / sqrt(|X||Y|)``
    over the pairs examined.
    """
    max_right = JUMBLED_MAX_RIGHT if max_right is None else max_right
    max_left = JUMBLED_MAX_LEFT if max_left is None else max_left
    if mode == "exhaustive":
        if F.n > max_right or F.n * F.t > max_left:
            raise CapExceeded(
                f"exhaustive jumbledness needs n <= {max_right} and n*t <= {max_left} "
                f"(got n={F.n}, n*t={F.n * F.t})"
            )
        measured, X, Y, aux = _exhaustive_jumbled(F, params.p)
    elif mode == "sampled":
        measured, X, Y, aux = _sampled_jumbled(F, params.p, samples, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ok = measured <= params.beta + JUMBLE_TOL
    e = aux.edge_count(X, Y)
    witness = None
    if not ok:
        witness = {
            "X": [list(x) for x in X],
            "Y": Y,
            "e": e,
            "expected": params.p * len(X) * len(Y),
            "bound": params.beta * math.sqrt(len(X) * len(Y)),
        }
    details = {"p": params.p, "beta": params.beta}
    if mode == "sampled":
        details.update(samples=samples, seed=seed)
    return CertReport("pass" if ok else "fail", mode, measured=measured, witness=witness, details=details)


def _sampled_jumbled(F: GraphFamily, p: float, samples: int, seed: int, batch: int = 8192):
    aux = build_auxiliary(F)
    A = aux.biadjacency().astype(np.float64)  # (nt, n)
    n, nt = F.n, A.shape[0]
    rng = np.random.default_rng(seed)
    best = -1.0
    arg = None
    done = 0
    while done < samples:
        B = min(batch, samples - done)
        kx = rng.integers(1, nt + 1, size=B)
        ky = rng.integers(1, n + 1, size=B)
        rx = np.argsort(rng.random((B, nt)), axis=1)
        ry = np.argsort(rng.random((B, n)), axis=1)
        Xind = np.argsort(rx, axis=1) < kx[:, None]
        Yind = np.argsort(ry, axis=1) < ky[:, None]
        e = np.einsum("bi,ij,bj->b", Xind.astype(np.float64), A, Yind.astype(np.float64))
        dev = np.abs(e - p * kx * ky) / np.sqrt(kx * ky)
        b = int(np.argmax(dev))
        if dev[b] > best:
            best = float(dev[b])
            arg = (np.flatnonzero(Xind[b]).tolist(), np.flatnonzero(Yind[b]).tolist())
        done += B
    xs, Y = arg
    return best, [aux.left[i] for i in xs], [int(y) for y in Y], aux


# --- spectral route ------------------------------------------------------------

def adjacency_spectrum(G: Graph) -> np.ndarray:
    """Ascending eigenvalues of the adjacency matrix (dense symmetric solver)."""
    return np.linalg.eigvalsh(G.adjacency_matrix())


def nontrivial_eigenvalue(G: Graph, spectrum: np.ndarray | None = None) -> tuple[int, float]:
    """``(d, lambda)`` for a ``d``-regular graph: one copy of ``d`` is dropped."""
    if G.n == 0 or not G.is_regular():
        raise PreconditionError("spectral certificate needs a regular graph", "regular")
    d = G.degree(0)
    ev = adjacency_spectrum(G) if spectrum is None else np.asarray(spectrum)
    i = int(np.argmin(np.abs(ev - d)))
    if abs(ev[i] - d) > 1e-6 * max(1, d):
        raise ArithmeticError(f"degree {d} missing from the computed spectrum")
    rest = np.delete(ev, i)
    lam = float(np.max(np.abs(rest))) if rest.size else 0.0
    return d, lam


def spectral_jumbled(G: Graph, spectrum: np.ndarray | None = None) -> JumbledParams:
    """``(d/n, max(lambda, 1))`` from the expander mixing bound."""
    d, lam = nontrivial_eigenvalue(G, spectrum)
    p = d / G.n
    if not 0 < p < 1:
        raise PreconditionError(f"degree {d} gives p = {p} outside (0, 1)", "0 < d < n")
    return JumbledParams(p, max(lam, 1.0))


def family_jumbled(params_per_graph: list[JumbledParams]) -> JumbledParams:
    """Family parameters ``(p, beta_max sqrt(t))`` from per-member parameters.

    Members must share ``p``; mixed densities are rejected rather than bounded.
    """
    if not params_per_graph:
        raise ValueError("need at least one member")
    p = params_per_graph[0].p
    for q in params_per_graph[1:]:
        if abs(q.p - p) > P_MATCH_TOL:
            raise ValueError(f"member densities differ: {p} vs {q.p}")
    beta = max(q.beta for q in params_per_graph)
    return JumbledParams(p, beta * math.sqrt(len(params_per_graph)))


def joined_from_jumbled(params: JumbledParams) -> int:
    """Smallest integer ``s > beta / p``.

    A ratio within rounding of an integer is treated as that integer, so a
    measured ``beta`` that lands just below the exact value never yields an
    ``s`` that is too small.
    """
    ratio = params.beta / params.p
    return math.floor(ratio * (1 + 1e-9) + 1e-12) + 1


def graph_params(G: Graph) -> JumbledParams:
    """Density ``2|E|/n^2`` and the exhaustively measured deficit as ``beta``.

    Used for small members whose ``p`` is fixed by their edge count.
    """
    p = 2 * G.num_edges / G.n**2
    F = GraphFamily.single(G)
    rep = jumbled_check(F, JumbledParams(p, 1.0))
    return JumbledParams(p, max(1.0, rep.measured))

