"""Independent reference implementations used to check the package.

Nothing here imports the code under test beyond plain data containers, so a
bug in the package cannot leak into the oracle.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def grid_graph(rows: int, cols: int) -> tuple[int, list[tuple[int, int]]]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return rows * cols, edges


def longest_path_depths(gates: list[tuple[int, ...]]) -> list[int]:
    """Brute force: follow every chain of 'next gate on a shared qubit' edges
    and keep the longest, without memoisation."""
    n = len(gates)

    def nxt(i):
        out = set()
        for q in gates[i]:
            for j in range(i + 1, n):
                if q in gates[j]:
                    out.add(j)
                    break
        return out

    def longest(i):
        return 1 + max((longest(j) for j in nxt(i)), default=0)

    return [longest(i) for i in range(n)]


class _UF:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            x = self.p[x]
        return x

    def join(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.p[ra] = rb
        return True


def min_spanning_weight_exhaustive(n: int, edges, weights) -> float:
    """Minimum over every (n-1)-edge subset that forms a tree."""
    best = math.inf
    for subset in itertools.combinations(range(len(edges)), n - 1):
        uf = _UF(n)
        if all(uf.join(*edges[i]) for i in subset):
            best = min(best, sum(weights[i] for i in subset))
    return best


def prim_weight(n: int, edges, weights) -> float:
    """Plain O(V*E) Prim; a different algorithm from the package's Kruskal."""
    adj = {u: [] for u in range(n)}
    for (u, v), w in zip(edges, weights):
        adj[u].append((w, v))
        adj[v].append((w, u))
    inside = {0}
    total = 0.0
    while len(inside) < n:
        w, v = min((w, v) for u in inside for w, v in adj[u] if v not in inside)
        inside.add(v)
        total += w
    return total


def all_pairs_bottleneck(n: int, edges, weights) -> dict[tuple[int, int], float]:
    """Minimum achievable max-edge weight between every pair: the smallest
    threshold at which the pair becomes connected using only edges at or
    below it."""
    out = {}
    for w in sorted(set(weights)):
        uf = _UF(n)
        for (u, v), x in zip(edges, weights):
            if x <= w:
                uf.join(u, v)
        for a in range(n):
            for b in range(a + 1, n):
                if (a, b) not in out and uf.find(a) == uf.find(b):
                    out[(a, b)] = w
    return out


def simple_path_bottleneck(n: int, edges, weights, a: int, b: int) -> float:
    """Minimum over all simple a-b paths of the path's largest edge weight."""
    adj = {u: [] for u in range(n)}
    for (u, v), w in zip(edges, weights):
        adj[u].append((v, w))
        adj[v].append((u, w))
    best = math.inf

    def dfs(u, seen, worst):
        nonlocal best
        if worst >= best:
            return
        if u == b:
            best = worst
            return
        for v, w in adj[u]:
            if v not in seen:
                seen.add(v)
                dfs(v, seen, max(worst, w))
                seen.remove(v)

    dfs(a, {a}, -math.inf)
    return best


def injection_distribution(theta: Fraction, max_depth: int = 64) -> dict[int, Fraction]:
    """Exact distribution of the injection count for Rz(theta * pi) by walking
    the success/failure tree: success stops; failure doubles the angle and
    stops for free once the doubled angle is a multiple of 1/2 (pi/2)."""
    dist: dict[int, Fraction] = {}

    def walk(angle, n, prob):
        # inject once
        n += 1
        dist[n] = dist.get(n, Fraction(0)) + prob / 2        # success
        nxt = angle * 2
        if (nxt * 2).denominator == 1 or n >= max_depth:
            dist[n] += prob / 2                                # Clifford fix-up (or cap)
            return
        walk(nxt, n, prob / 2)

    walk(Fraction(theta), 0, Fraction(1))
    return dist


def geometric_mean_slots(q: float, subpatches: int) -> float:
    s = 1 - (1 - q) ** subpatches
    return 1 / s
