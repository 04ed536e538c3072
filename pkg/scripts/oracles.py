"""Brute-force oracles for the frozen joinedness constants used in the tests.

Each value is the least ``s`` such that every ``s`` pairs ``(v, c)`` have a
combined neighborhood missing fewer than ``s`` vertices. Nothing here
imports colorembed: adjacency comes from plain integer bitmasks.

    python scripts/oracles.py
"""

import argparse
import itertools
import time


def complete(n):
    return [{u for u in range(n) if u != v} for v in range(n)]


def clique_plus_isolated(m):
    return complete(m) + [set()]


def perfect_matching(n):
    return [{v ^ 1} for v in range(n)]


def matching_deleted(n):
    return [{u for u in range(n) if u != v and u != v ^ 1} for v in range(n)]


def distance_graph(q, d, r):
    pts = list(itertools.product(range(q), repeat=d))
    return [{j for j, y in enumerate(pts) if sum((a - b) ** 2 for a, b in zip(x, y)) % q == r} for x in pts]


def joined(nbrs_per_color, n, s):
    rows = [sum(1 << u for u in nb) for nbrs in nbrs_per_color for nb in nbrs]
    full = (1 << n) - 1
    for X in itertools.combinations(rows, s):
        m = 0
        for row in X:
            m |= row
        if n - bin(m & full).count("1") >= s:
            return False
    return True


def min_joined(nbrs_per_color, n):
    for s in range(1, n + 1):
        if joined(nbrs_per_color, n, s):
            return s
    return None


CASES = {
    "K5": lambda: ([complete(5)], 5),
    "K5 + isolated": lambda: ([clique_plus_isolated(5)], 6),
    "matching on 6": lambda: ([perfect_matching(6)], 6),
    "K30 minus matching": lambda: ([matching_deleted(30)], 30),
    "F_5^2, r = 1": lambda: ([distance_graph(5, 2, 1)], 25),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", choices=sorted(CASES), action="append")
    args = ap.parse_args()
    for name in args.only or CASES:
        graphs, n = CASES[name]()
        t0 = time.perf_counter()
        s = min_joined(graphs, n)
        print(f"{name:20s} min_joined = {s}  ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
