"""Bag augmentations that shorten combinatorial paths: bridges, highways, super-highways.

All three keep the tree and root of the input decomposition and only enlarge
bags.  Each new bag ``B'_v`` satisfies ``B_v <= B'_v <= B_v | B'_{p(v)}``,
which is enough for the result to stay a tree decomposition.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations

from .combdiam import DecPath, SimplificationTrace, is_redundant
from .errors import InvalidParams, TraceFailed
from .treedec import TreeDecomposition, bag_union, lca


@dataclass(frozen=True)
class SyncAnnotation:
    lam: int
    levels: tuple[int, ...]
    sync_nodes: frozenset[int]
    sigma: tuple[int, ...]  # -1 for the root


@dataclass(frozen=True)
class LayerAnnotation:
    q: int
    spacing: tuple[int, ...]
    pi: tuple[int, ...]


def effective_lambda(T: TreeDecomposition, lam: int) -> int:
    if lam < 1:
        raise InvalidParams(f"lambda must be >= 1, got {lam}")
    return max(1, min(lam, T.depth))


def sync_annotation(T: TreeDecomposition, lam: int) -> SyncAnnotation:
    lam = effective_lambda(T, lam)
    levels, parent = T.levels, T.parent
    sync = frozenset(v for v in T.nodes if levels[v] % lam == 0)
    sigma = [-1] * T.num_nodes
    for v in T.bfs_order:
        p = parent[v]
        if p >= 0:
            sigma[v] = p if p in sync else sigma[p]
    return SyncAnnotation(lam, levels, sync, tuple(sigma))


def _up_path(T: TreeDecomposition, v: int, top: int) -> list[int]:
    """Nodes from ``v`` up to its ancestor ``top``, inclusive."""
    out = [v]
    while out[-1] != top:
        out.append(T.parent[out[-1]])
    return out


def bridges(T: TreeDecomposition, lam: int) -> TreeDecomposition:
    """Each bag absorbs the bags on the path up to its synchronization ancestor."""
    ann = sync_annotation(T, lam)
    bags = list(T.bags)
    for v in T.nodes:
        if v != T.root:
            bags[v] = bag_union(T, _up_path(T, v, ann.sigma[v]))
    return T.with_bags(bags)


def highways(T: TreeDecomposition, lam: int) -> TreeDecomposition:
    """Bridges plus the bags of every synchronization node above ``v``."""
    ann = sync_annotation(T, lam)
    bags = list(T.bags)
    for v in T.nodes:
        if v == T.root:
            continue
        to_root = _up_path(T, v, T.root)
        bridge = _up_path(T, v, ann.sigma[v])
        bags[v] = bag_union(T, set(bridge) | {w for w in to_root if w in ann.sync_nodes})
    return T.with_bags(bags)


def layer_spacing(width: int, depth: int, q: int) -> tuple[int, ...]:
    """Integer spacings ``s_0 | s_1 | ... | s_{q-1}`` approximating ``k^{j/q} d / k``.

    ``k = width + 1``.  Each target is rounded half-up, then lifted to a
    multiple of the previous spacing so that layers nest along every
    root path.
    """
    if q < 1:
        raise InvalidParams(f"q must be >= 1, got {q}")
    k = width + 1
    raw = [max(1, math.floor(k ** (j / q) * depth / k + 0.5)) for j in range(q)]
    spacing = [raw[0]]
    for j in range(1, q):
        spacing.append(spacing[-1] * max(1, math.floor(raw[j] / spacing[-1] + 0.5)))
    return tuple(spacing)


def layer_annotation(T: TreeDecomposition, q: int, spacing: tuple[int, ...] | None = None) -> LayerAnnotation:
    if spacing is None:
        spacing = layer_spacing(T.width, T.depth, q)
    if len(spacing) != q:
        raise InvalidParams("need one spacing per layer")
    pi = []
    for v in T.nodes:
        lv = T.levels[v]
        pi.append(max((j for j in range(q) if lv % spacing[j] == 0), default=-1))
    return LayerAnnotation(q, tuple(spacing), tuple(pi))


def super_highway_walk(T: TreeDecomposition, start: int, pi) -> list[int]:
    """Nodes on the upward walk from ``start`` whose layer equals the running max."""
    out = []
    running = -2
    w = start
    while w >= 0:
        if pi[w] >= running:
            running = pi[w]
            out.append(w)
        w = T.parent[w]
    return out


def super_highways(
    T: TreeDecomposition, q: int, spacing: tuple[int, ...] | None = None
) -> TreeDecomposition:
    """Layered highways: walk up from ``p(v)`` keeping only nodes of monotone layer."""
    ann = layer_annotation(T, q, spacing)
    bags = list(T.bags)
    for v in T.nodes:
        if v != T.root:
            walk = super_highway_walk(T, T.parent[v], ann.pi)
            bags[v] = bag_union(T, [v, *walk])
    return T.with_bags(bags)


# ---------------------------------------------------------------------------
# certification


def diameter_bound(mode: str, *, depth: int = 0, lam: int = 1, q: int = 1) -> int:
    if mode == "bridges":
        return 2 * (depth // lam) + 2
    if mode == "highways":
        return 3
    if mode == "superhighways":
        return 2 * q + 1
    raise InvalidParams(f"unknown mode {mode!r}")


def _lemma_trace(T: TreeDecomposition, s: int, t: int, rank, stages: int, elide_top: bool) -> SimplificationTrace:
    """Replay the bypass order from the diameter lemmas on the path ``s -> t``.

    Stage 0 removes every redundant rank-0 interior node.  Stage ``j >= 1``
    removes rank-``j`` nodes on each side of the lowest common ancestor,
    except the one closest to it.  Finally the ancestor itself is tried.
    """
    x = lca(T, s, t)
    path = DecPath.from_tree(T, s, t)
    current = path
    bypassed: list[int] = []

    def sweep(candidates) -> int | None:
        for node in candidates:
            idx = current.nodes.index(node)
            if 0 < idx < current.length and is_redundant(current, idx):
                return node
        return None

    for stage in range(stages):
        while True:
            nodes = current.nodes
            xi = nodes.index(x)
            left = [v for v in nodes[1:xi] if rank[v] == stage]
            right = [v for v in nodes[xi + 1 : -1] if rank[v] == stage][::-1]
            if stage > 0:
                # keep the node of this rank nearest the ancestor on each side
                left, right = left[:-1], right[:-1]
            node = sweep(left)
            if node is None:
                node = sweep(right)
            if node is None:
                break
            bypassed.append(node)
            current = current.bypass(current.nodes.index(node))
    if elide_top and x not in (s, t):
        idx = current.nodes.index(x)
        if is_redundant(current, idx):
            bypassed.append(x)
            current = current.bypass(idx)
    return SimplificationTrace(path, tuple(bypassed), current)


def certified_diameter_bound(
    tprime: TreeDecomposition,
    mode: str,
    *,
    lam: int | None = None,
    q: int | None = None,
    spacing: tuple[int, ...] | None = None,
    sample: int | None = 300,
    seed: int = 0,
) -> tuple[int, dict[tuple[int, int], SimplificationTrace]]:
    """Concrete diameter bound for a construction output, with witnessing traces.

    For super-highways, pass the ``spacing`` used to build ``tprime`` (it
    depends on the width of the original decomposition).  Up to ``sample``
    node pairs are traced (all pairs when ``sample`` is None or large enough).
    """
    depth = tprime.depth
    if mode in ("bridges", "highways"):
        if lam is None:
            raise InvalidParams(f"{mode} needs lam")
        ann = sync_annotation(tprime, lam)
        rank = [0 if v not in ann.sync_nodes else 1 for v in tprime.nodes]
        bound = diameter_bound(mode, depth=depth, lam=ann.lam)
        stages, elide = (1, False) if mode == "bridges" else (2, True)
    elif mode == "superhighways":
        if q is None or spacing is None:
            raise InvalidParams("superhighways needs q and spacing")
        layers = layer_annotation(tprime, q, spacing)
        rank = [p + 1 for p in layers.pi]
        bound = diameter_bound(mode, q=q)
        stages, elide = q + 1, True
    else:
        raise InvalidParams(f"unknown mode {mode!r}")

    pairs = list(combinations(tprime.nodes, 2))
    if sample is not None and len(pairs) > sample:
        pairs = random.Random(seed).sample(pairs, sample)
    traces = {}
    for s, t in pairs:
        trace = _lemma_trace(tprime, s, t, rank, stages, elide)
        if trace.final_length > bound:
            raise TraceFailed(
                f"{mode}: pair {(s, t)} stuck at length {trace.final_length} > {bound}"
            )
        traces[(s, t)] = trace
    return bound, traces


def sandwich_violations(T: TreeDecomposition, tprime: TreeDecomposition) -> list[int]:
    """Nodes where ``B_v <= B'_v <= B_v | B'_{p(v)}`` fails (root: ``B'_r == B_r``)."""
    bad = []
    for v in T.nodes:
        p = T.parent[v]
        if p < 0:
            ok = tprime.bags[v] == T.bags[v]
        else:
            ok = T.bags[v] <= tprime.bags[v] <= T.bags[v] | tprime.bags[p]
        if not ok:
            bad.append(v)
    return bad
