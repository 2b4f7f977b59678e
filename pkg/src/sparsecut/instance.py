"""Sparsest-cut instances: data model, cut evaluation, generators and JSON I/O.

Vertices are dense integers ``0..n-1``.  Capacities and demands are kept as
exact :class:`fractions.Fraction` values so that every sparsity comparison is
exact.  An assignment over ``V`` is either a sequence of 0/1 labels indexed by
vertex or a mapping ``vertex -> label``.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import InvalidInstance, InvalidParams, NoDemandSeparated, TooManyDemands
from .treedec import TreeDecomposition

Edge = tuple[int, int, Fraction]
Assignment = Union[Sequence[int], Mapping[int, int]]


def _as_fraction(w) -> Fraction:
    if isinstance(w, float):
        # floats are accepted only through their shortest decimal repr
        return Fraction(repr(w))
    return Fraction(w)


def _normalize_edges(edges, n: int, kind: str) -> tuple[Edge, ...]:
    seen = set()
    out = []
    for e in edges:
        u, v, w = e
        u, v, w = int(u), int(v), _as_fraction(w)
        if u == v:
            raise InvalidInstance(f"self-loop on vertex {u} in {kind} edges")
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidInstance(f"{kind} edge ({u}, {v}) out of range for n={n}")
        if w <= 0:
            raise InvalidInstance(f"{kind} edge ({u}, {v}) has non-positive weight {w}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise InvalidInstance(f"duplicate {kind} edge {key}")
        seen.add(key)
        out.append((key[0], key[1], w))
    return tuple(out)


@dataclass(frozen=True)
class CutInstance:
    """Capacity graph G and demand graph D on the vertex set ``range(n)``.

    Edges are stored with ``u < v``.  An instance without demand edges is
    allowed as a graph skeleton; every operation that needs demands raises.
    """

    n: int
    cap_edges: tuple[Edge, ...] = ()
    dem_edges: tuple[Edge, ...] = ()
    _dem_lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInstance("instance needs at least one vertex")
        object.__setattr__(self, "cap_edges", _normalize_edges(self.cap_edges, self.n, "capacity"))
        object.__setattr__(self, "dem_edges", _normalize_edges(self.dem_edges, self.n, "demand"))
        object.__setattr__(self, "_dem_lookup", {(u, v): w for u, v, w in self.dem_edges})

    @property
    def vertices(self) -> range:
        return range(self.n)

    def graph_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, _ in self.cap_edges]

    def demand_pairs(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, _ in self.dem_edges]

    def is_demand_pair(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._dem_lookup

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n)]
        for u, v, _ in self.cap_edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def with_demands(self, dem_edges) -> "CutInstance":
        return CutInstance(self.n, self.cap_edges, tuple(dem_edges))

    def scaled(self, cap_factor=1, dem_factor=1) -> "CutInstance":
        cf, df = Fraction(cap_factor), Fraction(dem_factor)
        return CutInstance(
            self.n,
            tuple((u, v, w * cf) for u, v, w in self.cap_edges),
            tuple((u, v, w * df) for u, v, w in self.dem_edges),
        )


def _label(f: Assignment, v: int) -> int:
    return f[v]


def cut_value(edges: Sequence[Edge], f: Assignment) -> Fraction:
    """Total weight of the edges whose endpoints get different labels."""
    return sum((w for u, v, w in edges if _label(f, u) != _label(f, v)), Fraction(0))


def sparsity(inst: CutInstance, f: Assignment) -> Fraction:
    """Cut capacity divided by separated demand for the V-assignment ``f``."""
    if isinstance(f, Mapping):
        missing = [v for v in inst.vertices if v not in f]
        if missing:
            raise InvalidParams(f"assignment is not total on V; missing {missing[:5]}")
    elif len(f) != inst.n:
        raise InvalidParams(f"assignment has {len(f)} labels for n={inst.n}")
    dem = cut_value(inst.dem_edges, f)
    if dem == 0:
        raise NoDemandSeparated("assignment separates no demand pair")
    return cut_value(inst.cap_edges, f) / dem


def mirror(f: Assignment) -> Assignment:
    """Flip every label; the mirrored assignment describes the same cut."""
    if isinstance(f, Mapping):
        return {v: 1 - b for v, b in f.items()}
    return type(f)(1 - b for b in f) if isinstance(f, (tuple, list)) else tuple(1 - b for b in f)


# ---------------------------------------------------------------------------
# generators


def generate_partial_ktree(
    n: int, k: int, keep_prob: float = 1.0, seed: int = 0
) -> tuple[CutInstance, TreeDecomposition]:
    """Random partial k-tree on ``n`` vertices with a witnessing decomposition.

    A k-tree is grown from a (k+1)-clique by repeatedly attaching a new vertex
    to a uniformly chosen existing k-clique; each edge is then kept with
    probability ``keep_prob``.  The decomposition has one bag per grown clique,
    so its width is exactly ``k``.  Capacities are 1 and no demands are set.
    """
    if k < 1 or n < k + 1:
        raise InvalidParams(f"need k >= 1 and n >= k+1, got n={n}, k={k}")
    if not 0 < keep_prob <= 1:
        raise InvalidParams(f"keep_prob must lie in (0, 1], got {keep_prob}")
    rng = np.random.default_rng(seed)
    label = rng.permutation(n).tolist()

    bags: list[frozenset[int]] = [frozenset(range(k + 1))]
    parents: list[int] = [-1]
    edges: set[tuple[int, int]] = {(u, v) for u in range(k + 1) for v in range(u + 1, k + 1)}
    # each k-clique remembers the node whose bag contains it
    cliques: list[tuple[frozenset[int], int]] = [
        (bags[0] - {u}, 0) for u in sorted(bags[0])
    ]
    for v in range(k + 1, n):
        clique, owner = cliques[int(rng.integers(len(cliques)))]
        node = len(bags)
        bags.append(clique | {v})
        parents.append(owner)
        edges.update((u, v) for u in clique)
        cliques.extend((clique - {u} | {v}, node) for u in sorted(clique))

    kept = []
    for u, v in sorted(edges):
        if keep_prob >= 1 or rng.random() < keep_prob:
            a, b = label[u], label[v]
            kept.append((min(a, b), max(a, b), Fraction(1)))
    kept.sort()
    relabeled = [frozenset(label[u] for u in bag) for bag in bags]
    td = TreeDecomposition.from_parents(relabeled, parents)
    return CutInstance(n, tuple(kept)), td


def attach_random_demands(inst: CutInstance, m_d: int, seed: int = 0) -> CutInstance:
    """Return ``inst`` with ``m_d`` distinct uniformly random unit demand pairs."""
    n = inst.n
    total = n * (n - 1) // 2
    if m_d < 1:
        raise InvalidParams("m_d must be at least 1")
    if m_d > total:
        raise TooManyDemands(f"{m_d} demands requested but only {total} pairs exist")
    rng = np.random.default_rng(seed)
    picks = sorted(rng.choice(total, size=m_d, replace=False).tolist())
    pairs = []
    # unrank pair index -> (u, v) in lexicographic order
    for idx in picks:
        u = 0
        while idx >= n - 1 - u:
            idx -= n - 1 - u
            u += 1
        pairs.append((u, u + 1 + idx, Fraction(1)))
    return inst.with_demands(pairs)


# ---------------------------------------------------------------------------
# serialization


def format_rational(q: Fraction) -> str:
    """Exact decimal string when one exists, otherwise ``"p/q"``."""
    q = Fraction(q)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    if places == 0:
        return str(q.numerator)
    scaled = q * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    text = f"{sign}{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")
    return text


def parse_rational(text: str) -> Fraction:
    return Fraction(text)


def instance_to_dict(inst: CutInstance) -> dict:
    return {
        "n": inst.n,
        "cap_edges": [{"u": u, "v": v, "w": format_rational(w)} for u, v, w in inst.cap_edges],
        "dem_edges": [{"u": u, "v": v, "w": format_rational(w)} for u, v, w in inst.dem_edges],
    }


def instance_from_dict(data: Mapping) -> CutInstance:
    try:
        n = int(data["n"])
        cap = [(e["u"], e["v"], parse_rational(str(e["w"]))) for e in data.get("cap_edges", [])]
        dem = [(e["u"], e["v"], parse_rational(str(e["w"]))) for e in data.get("dem_edges", [])]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidInstance(f"malformed instance JSON: {exc}") from exc
    return CutInstance(n, tuple(cap), tuple(dem))


def dumps_instance(inst: CutInstance) -> str:
    return json.dumps(instance_to_dict(inst))


def loads_instance(text: str) -> CutInstance:
    return instance_from_dict(json.loads(text))
