"""Packing and covering numbers of finite (pseudo)metric sets.

Conventions: a set is eps-separated when all pairwise distances are >= eps,
and eps-dense when every point is at distance < eps from a chosen center.
With these, max_separated(2 eps) <= min_dense(eps) <= max_separated(eps)
holds with no slack.

Exact counts use bitset branch and bound (maximum clique in the
"compatible" graph for packing, set cover for covering); past the point or
node budget the result falls back to a greedy bound and says so in ``kind``.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .microstates import Microstate, as_fraction, node_budget
from .structures import FiniteStructure

EXACT_POINT_LIMIT = 2000


@dataclass(frozen=True)
class PackingResult:
    count: int
    kind: str  # separated_exact | separated_greedy_lower | dense_exact | dense_greedy_upper
    eps: Fraction
    E: tuple = ()


class _OutOfBudget(Exception):
    pass


def d_E(sigma: Microstate, tau: Microstate, E: Sequence[int], model: FiniteStructure) -> Fraction:
    """Sup over E of the model distance between the two images."""
    best = Fraction(0)
    for s in E:
        try:
            a, b = sigma[s], tau[s]
        except ValueError:
            raise ValueError(f"element {s} is outside the microstates' domain")
        best = max(best, model.metric(a, b))
    return best


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _compat_graph(points, eps, metric):
    n = len(points)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if metric(points[i], points[j]) >= eps:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return adj


def _greedy_separated(n, adj) -> list[int]:
    chosen, allowed = [], (1 << n) - 1
    for i in range(n):
        if allowed >> i & 1:
            chosen.append(i)
            allowed &= adj[i]
    return chosen


def _color_sort(P, adj):
    """Greedy coloring of P (color classes are independent in adj)."""
    out = []
    color = 0
    while P:
        color += 1
        Q = P
        while Q:
            low = Q & -Q
            v = low.bit_length() - 1
            Q &= ~adj[v] & ~low
            P &= ~low
            out.append((v, color))
    return out


def _max_clique(n, adj, budget):
    best = _greedy_separated(n, adj)
    everyone = (1 << n) - 1
    colored = _color_sort(everyone, adj)
    if colored and colored[-1][1] <= len(best):
        return best
    nodes = 0

    def expand(C, P):
        nonlocal best, nodes
        nodes += 1
        if nodes > budget:
            raise _OutOfBudget
        for v, c in reversed(_color_sort(P, adj)):
            if len(C) + c <= len(best):
                return
            newP = P & adj[v]
            if newP:
                expand(C + [v], newP)
            elif len(C) + 1 > len(best):
                best = C + [v]
            P &= ~(1 << v)

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, n + 200))
    try:
        expand([], everyone)
    finally:
        sys.setrecursionlimit(limit)
    return best


def max_separated(points: Sequence, eps, metric: Callable, exact_limit: int = EXACT_POINT_LIMIT,
                  budget: int | None = None) -> PackingResult:
    """Largest eps-separated subset size; exact when within budget, else a
    greedy-in-order lower bound."""
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = len(points)
    if n == 0:
        return PackingResult(0, "separated_exact", eps)
    adj = _compat_graph(points, eps, metric)
    if n <= exact_limit:
        try:
            best = _max_clique(n, adj, node_budget() if budget is None else budget)
            return PackingResult(len(best), "separated_exact", eps)
        except _OutOfBudget:
            pass
    return PackingResult(len(_greedy_separated(n, adj)), "separated_greedy_lower", eps)


def _cover_sets(points, eps, metric):
    n = len(points)
    cover = [1 << i for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if metric(points[i], points[j]) < eps:
                cover[i] |= 1 << j
                cover[j] |= 1 << i
    return cover


def _greedy_cover(n, cover) -> list[int]:
    left, chosen = (1 << n) - 1, []
    while left:
        c = max(range(n), key=lambda i: (bin(cover[i] & left).count("1"), -i))
        chosen.append(c)
        left &= ~cover[c]
    return chosen


def _min_cover(n, cover, budget):
    best = _greedy_cover(n, cover)
    sep = _greedy_separated(n, [~c & ((1 << n) - 1) for c in cover])
    if len(sep) < len(best):
        best = sep
    nodes = 0

    def lower(left):
        most = max(bin(c & left).count("1") for c in cover)
        return -(-bin(left).count("1") // most)

    def rec(left, chosen):
        nonlocal best, nodes
        nodes += 1
        if nodes > budget:
            raise _OutOfBudget
        if not left:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + lower(left) >= len(best):
            return
        u = min(_bits(left), key=lambda v: bin(cover[v]).count("1"))
        cands = sorted(_bits(cover[u]), key=lambda c: -bin(cover[c] & left).count("1"))
        for c in cands:
            chosen.append(c)
            rec(left & ~cover[c], chosen)
            chosen.pop()

    rec((1 << n) - 1, [])
    return best


def min_dense(points: Sequence, eps, metric: Callable, exact_limit: int = EXACT_POINT_LIMIT,
              budget: int | None = None) -> PackingResult:
    """Smallest eps-dense subset size (centers drawn from the points)."""
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = len(points)
    if n == 0:
        return PackingResult(0, "dense_exact", eps)
    cover = _cover_sets(points, eps, metric)
    if n <= exact_limit:
        try:
            return PackingResult(len(_min_cover(n, cover, node_budget() if budget is None else budget)),
                                 "dense_exact", eps)
        except _OutOfBudget:
            pass
    # a maximal separated set is dense too, so take the better of the two
    sep = _greedy_separated(n, [~c & ((1 << n) - 1) for c in cover])
    return PackingResult(min(len(_greedy_cover(n, cover)), len(sep)), "dense_greedy_upper", eps)


def packing_number_of_microstates(microstates: Sequence[Microstate], E: Sequence[int], eps,
                                  model: FiniteStructure, budget: int | None = None) -> PackingResult:
    """N_{E,eps} of a microstate set under the sup-over-E metric."""
    eps = as_fraction(eps)
    E = tuple(E)
    if not microstates:
        return PackingResult(0, "separated_exact", eps, E)
    if not E:
        # d_E is identically 0: every pair is closer than eps
        return PackingResult(1, "separated_exact", eps, E)
    pos = [microstates[0].F.index(s) for s in E]
    # microstates equal on E sit at distance 0 and never share a separated set
    points = list(dict.fromkeys(tuple(m.images[p] for p in pos) for m in microstates))
    cache: dict = {}

    def dist(x, y):
        best = Fraction(0)
        for a, b in zip(x, y):
            key = (a, b) if a <= b else (b, a)
            v = cache.get(key)
            if v is None:
                v = cache[key] = model.metric(a, b)
            if v > best:
                best = v
        return best

    res = max_separated(points, eps, dist, budget=budget)
    return PackingResult(res.count, res.kind, eps, E)
