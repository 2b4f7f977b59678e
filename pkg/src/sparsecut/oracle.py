"""Brute-force ground truth: exact sparsest cut and exact treewidth on tiny graphs."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm

from .errors import NoDemandSeparated, TooLarge
from .instance import CutInstance

MAX_ORACLE_N = 24
MAX_TREEWIDTH_N = 10


@dataclass(frozen=True)
class OracleResult:
    cut: tuple[int, ...]
    phi: Fraction
    enumerated: int


def _scaled(edges, n):
    """Integer weights over a common denominator plus per-vertex incidence lists."""
    denom = lcm(*(w.denominator for _, _, w in edges)) if edges else 1
    inc = [[] for _ in range(n)]
    for u, v, w in edges:
        iw = int(w * denom)
        inc[u].append((v, iw))
        inc[v].append((u, iw))
    return denom, inc


def brute_force(inst: CutInstance) -> OracleResult:
    """Minimum sparsity over all bipartitions, by Gray-code enumeration.

    Vertex 0 stays on side 0; the remaining ``n - 1`` labels run through a
    reflected Gray code so each step flips one vertex and the cut values are
    updated from that vertex's incident edges.  Cuts separating no demand are
    skipped.
    """
    n = inst.n
    if n > MAX_ORACLE_N:
        raise TooLarge(f"oracle is capped at n={MAX_ORACLE_N}, got {n}")
    if not inst.dem_edges:
        raise NoDemandSeparated("instance has no demand edges")
    cden, cinc = _scaled(inst.cap_edges, n)
    dden, dinc = _scaled(inst.dem_edges, n)
    side = [0] * n
    cap = dem = 0
    best = None  # (cap, dem, code)
    code = 0
    count = 0
    for step in range(1, 1 << (n - 1)):
        bit = (step & -step).bit_length() - 1
        v = bit + 1
        code ^= 1 << bit
        side[v] ^= 1
        sv = side[v]
        for u, w in cinc[v]:
            cap += w if side[u] != sv else -w
        for u, w in dinc[v]:
            dem += w if side[u] != sv else -w
        count += 1
        if dem == 0:
            continue
        if best is None or cap * best[1] < best[0] * dem:
            best = (cap, dem, code)
    if best is None:
        raise NoDemandSeparated("no bipartition separates a demand pair")
    cap, dem, code = best
    phi = Fraction(cap, cden) / Fraction(dem, dden)
    cut = tuple(0 if v == 0 else (code >> (v - 1)) & 1 for v in range(n))
    return OracleResult(cut, phi, count)


def treewidth_exact(G) -> int:
    """Exact treewidth by dynamic programming over elimination prefixes.

    ``TW(S) = min_{v in S} max(TW(S - v), |Q(S - v, v)|)`` where ``Q(S, v)`` is
    the set of vertices outside ``S | {v}`` reachable from ``v`` through ``S``.
    """
    n = G.n
    if n > MAX_TREEWIDTH_N:
        raise TooLarge(f"exact treewidth is capped at n={MAX_TREEWIDTH_N}, got {n}")
    adj = [0] * n
    for u, v, *_ in G.cap_edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u

    def q_size(S: int, v: int) -> int:
        seen = 1 << v
        frontier = 1 << v
        out = 0
        while frontier:
            x = (frontier & -frontier).bit_length() - 1
            frontier &= frontier - 1
            nbrs = adj[x] & ~seen
            seen |= nbrs
            out |= nbrs & ~S
            frontier |= nbrs & S
        return bin(out).count("1")

    @lru_cache(maxsize=None)
    def tw(S: int) -> int:
        if S == 0:
            return -1
        best = n
        rest = S
        while rest:
            v = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            prev = S & ~(1 << v)
            best = min(best, max(tw(prev), q_size(prev, v)))
        return best

    return max(tw((1 << n) - 1), 0)
