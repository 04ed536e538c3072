"""Goodness verification in three modes.

exact        every colored set up to the bound is examined (a proof)
incremental  singletons, pairs and a cache of near-tight sets (evidence)
best-effort  greedy descent on the residual from every singleton (evidence)

The exact search is a depth-first enumeration that cuts a branch once no
extension can bring the residual down to the threshold: adding ``y`` lowers
the residual by at most ``w(y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import CapExceeded
from .embedding import Embedding, GoodnessParams

CACHE_SLACK = 2


@dataclass
class GoodnessReport:
    verdict: str
    mode: str
    bound: int
    witness: list | None = None
    residual: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def is_proof(self) -> bool:
        return self.mode == "exact"

    def to_dict(self) -> dict:
        d = {"verdict": self.verdict, "mode": self.mode, "bound": self.bound, "proof": self.is_proof}
        if self.witness is not None:
            d["witness"] = [list(x) for x in self.witness]
            d["residual"] = self.residual
        if self.details:
            d["details"] = self.details
        return d


def subset_count(N: int, bound: int) -> int:
    return sum(math.comb(N, k) for k in range(1, min(bound, N) + 1))


def _elements(e: Embedding):
    """Colored pairs of the universe with their available rows and weights, heaviest first."""
    pp = e.parent_pairs()
    avail = e.universe & ~e.img
    out = []
    for v, c in e.universe_pairs():
        row = e.host.row(v, c)
        out.append(((v, c), row & avail, row & e.universe, e.weight(v, c, pp)))
    out.sort(key=lambda x: (-x[3], x[0]))
    return out


def enumerate_low(e: Embedding, bound: int, threshold: int, stop_first: bool = False):
    """Yield ``(X, R(X), Gamma(X))`` for every nonempty ``|X| <= bound`` with ``R(X) <= threshold``."""
    els = _elements(e)
    N = len(els)
    rows = [x[1] for x in els]
    full = [x[2] for x in els]
    ws = [x[3] for x in els]
    sufmax = [0] * (N + 1)
    for i in range(N - 1, -1, -1):
        sufmax[i] = max(ws[i], sufmax[i + 1])
    chosen: list[int] = []
    found = []

    def rec(start: int, cov: int, gam: int, wsum: int) -> bool:
        for i in range(start, N):
            c2 = cov | rows[i]
            w2 = wsum + ws[i]
            R = c2.bit_count() - w2
            chosen.append(i)
            if R <= threshold:
                found.append(([els[j][0] for j in chosen], R, gam | full[i]))
                if stop_first:
                    return True
            slots = bound - len(chosen)
            if slots > 0 and R - slots * sufmax[i + 1] <= threshold:
                if rec(i + 1, c2, gam | full[i], w2):
                    return True
            chosen.pop()
        return False

    if bound >= 1:
        rec(0, 0, 0, 0)
    return found


def _exact(e: Embedding, bound: int, cap: int) -> GoodnessReport:
    N = len(e.universe_pairs())
    total = subset_count(N, bound)
    if total > cap:
        raise CapExceeded(f"exact verification needs {total} subsets, cap is {cap}")
    bad = enumerate_low(e, bound, -1, stop_first=True)
    details = {"subsets": total}
    if bad:
        X, R, _ = bad[0]
        return GoodnessReport("fail", "exact", bound, X, R, details)
    return GoodnessReport("pass", "exact", bound, details=details)


def _small_sets(e: Embedding, bound: int, slack: int):
    """All singletons and pairs with residual at most ``slack``."""
    return enumerate_low(e, min(bound, 2), slack)


def _incremental(e: Embedding, bound: int) -> GoodnessReport:
    from .embedding import residual

    low = _small_sets(e, bound, CACHE_SLACK)
    worst = None
    for X, R, _ in low:
        e.cache[frozenset(X)] = R
    for key in list(e.cache):
        if len(key) > bound:
            continue
        R = residual(e, key)
        e.cache[key] = R
        if R > CACHE_SLACK:
            del e.cache[key]
        if worst is None or R < worst[1]:
            worst = (sorted(key), R)
    details = {"cached": len(e.cache)}
    if worst is not None and worst[1] < 0:
        return GoodnessReport("fail", "incremental", bound, worst[0], worst[1], details)
    return GoodnessReport("pass", "incremental", bound, details=details)


def greedy_violator(e: Embedding, bound: int):
    """Smallest residual reached by greedy growth from each singleton: ``(X, R)``."""
    els = _elements(e)
    N = len(els)
    rows = [x[1] for x in els]
    ws = [x[3] for x in els]
    best = None
    for start in range(N):
        used = {start}
        cov = rows[start]
        wsum = ws[start]
        R = cov.bit_count() - wsum
        if best is None or R < best[1]:
            best = ([els[start][0]], R)
        while len(used) < bound:
            pick, pick_R = None, None
            for j in range(N):
                if j in used:
                    continue
                Rj = (cov | rows[j]).bit_count() - wsum - ws[j]
                if pick_R is None or Rj < pick_R:
                    pick, pick_R = j, Rj
            if pick is None:
                break
            used.add(pick)
            cov |= rows[pick]
            wsum += ws[pick]
            R = pick_R
            if R < best[1]:
                best = ([els[j][0] for j in sorted(used)], R)
        if best[1] < 0:
            break
    return best


def _best_effort(e: Embedding, bound: int) -> GoodnessReport:
    if bound < 1 or not e.universe:
        return GoodnessReport("pass", "best-effort", bound)
    X, R = greedy_violator(e, bound)
    if R < 0:
        return GoodnessReport("fail", "best-effort", bound, X, R)
    return GoodnessReport("pass", "best-effort", bound, details={"min_residual_seen": R})


def verify_good(
    e: Embedding,
    params: GoodnessParams | None = None,
    mode: str | None = None,
    bound: int | None = None,
    cap: int | None = None,
) -> GoodnessReport:
    """Check ``R(X) >= 0`` for colored sets of size at most ``bound`` (default ``2s``)."""
    params = params or e.params
    mode = mode or e.config.mode
    bound = params.bound if bound is None else bound
    cap = e.config.cap if cap is None else cap
    if params is not e.params:
        e = e.copy()
        e.params = params
    if bound <= 0:
        return GoodnessReport("pass", mode, bound, details={"vacuous": True})
    if mode == "exact":
        return _exact(e, bound, cap)
    if mode == "incremental":
        return _incremental(e, bound)
    if mode == "best-effort":
        return _best_effort(e, bound)
    raise ValueError(f"unknown mode {mode!r}")
