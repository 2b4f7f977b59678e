"""Conditional-sampling rounding of lifted solutions and exact cut probabilities.

The rounding fixes the labels of a start bag by sampling its marginal, then
walks the decomposition tree outward.  At every new node ``v`` reached from an
already processed neighbour ``u`` it samples the fresh vertices
``B_v - B_u`` conditioned on the labels already seen on ``B_v & B_u``.

Cut probabilities of a pair ``(s, t)`` follow a Markov chain along the bag
path between them, whose states are the labels on consecutive bag
intersections.  :func:`path_layers` builds that chain and
:func:`algcut_exact` sums over it with exact rationals.
"""

from __future__ import annotations

import bisect
import math
import random
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .combdiam import DecPath, simplify_exact, simplify_greedy
from .errors import (
    AllRunsDegenerate,
    EndpointNotInBag,
    InvalidParams,
    PairNotConnected,
    TooLarge,
    ZeroProbabilityCondition,
)
from .instance import CutInstance, cut_value
from .lifting import LiftedSolution, LocalDistribution, bag_marginal
from .treedec import TreeDecomposition

FLOAT_FLOOR = 1e-12
MAX_LAYER_BITS = 16


def derive_seed(seed: int, trial: int) -> int:
    """64-bit seed for one trial, independent of every other trial index."""
    words = np.random.SeedSequence([seed & (2**64 - 1), trial]).generate_state(2, np.uint32)
    return int(words[0]) | int(words[1]) << 32


def traversal_order(T: TreeDecomposition, start: int, kind: str = "bfs") -> tuple[int, ...]:
    """Connected traversal of ``T`` from ``start``, breadth- or depth-first."""
    if kind not in ("bfs", "dfs"):
        raise InvalidParams(f"unknown traversal {kind!r}")
    seen = {start}
    order = []
    frontier = deque([start])
    while frontier:
        v = frontier.popleft() if kind == "bfs" else frontier.pop()
        order.append(v)
        nbrs = T.adjacency[v] if kind == "bfs" else reversed(T.adjacency[v])
        for w in nbrs:
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    if len(order) != T.num_nodes:
        raise PairNotConnected("decomposition tree is disconnected")
    return tuple(order)


def _traversal_parents(T: TreeDecomposition, order: Sequence[int]) -> list[int]:
    """Processed neighbour of each node in a connected traversal (-1 for the start)."""
    pos = {v: i for i, v in enumerate(order)}
    if len(pos) != T.num_nodes:
        raise InvalidParams("traversal must visit every node exactly once")
    parents = [-1] * T.num_nodes
    for i, v in enumerate(order[1:], start=1):
        earlier = [w for w in T.adjacency[v] if pos[w] < i]
        if len(earlier) != 1:
            raise InvalidParams(f"node {v} is not attached to the processed part")
        parents[v] = earlier[0]
    return parents


@dataclass(frozen=True)
class RoundingRun:
    seed: int
    order: tuple[int, ...]
    assignment: tuple[int, ...]
    choices: tuple[tuple[int, int, int], ...]  # (node, key on B+, mask on B-)


class _Table:
    """Sampling table for one node: conditional law of ``B-`` given ``B+``."""

    def __init__(self, dist: LocalDistribution, plus: tuple[int, ...], node: int):
        self.node = node
        self.plus = plus
        self.minus = tuple(v for v in dist.domain if v not in plus)
        joint = dist.marginal(dist.domain)  # copy in sorted-domain order
        pos = {v: j for j, v in enumerate(joint.domain)}
        plus_pos = [pos[v] for v in plus]
        minus_pos = [pos[v] for v in self.minus]
        self.exact = not isinstance(joint.probs[0], float)
        rows: dict[int, list] = {}
        for mask, p in enumerate(joint.probs):
            key = sum((mask >> j & 1) << k for k, j in enumerate(plus_pos))
            sub = sum((mask >> j & 1) << k for k, j in enumerate(minus_pos))
            rows.setdefault(key, []).append((sub, p))
        self.rows = {}
        for key, entries in rows.items():
            subs = [s for s, _ in entries]
            probs = [p for _, p in entries]
            if self.exact:
                if sum(probs) == 0:
                    self.rows[key] = None
                    continue
                den = reduce(math.lcm, (Fraction(p).denominator for p in probs), 1)
                weights = [int(Fraction(p) * den) for p in probs]
            else:
                weights = [max(float(p), 0.0) for p in probs]
                if sum(weights) < FLOAT_FLOOR:
                    weights = [max(w, FLOAT_FLOOR) for w in weights]
            cum = []
            acc = 0
            for w in weights:
                acc += w
                cum.append(acc)
            self.rows[key] = (subs, cum)

    def draw(self, rng: random.Random, key: int) -> int:
        row = self.rows.get(key)
        if row is None:
            raise ZeroProbabilityCondition(
                f"node {self.node}: observed labels on {self.plus} have probability 0"
            )
        subs, cum = row
        total = cum[-1]
        r = rng.randrange(total) if self.exact else rng.random() * total
        return subs[bisect.bisect_right(cum, r)]


class Rounder:
    """Precomputed sampling tables for one traversal of a lifted solution."""

    def __init__(self, T: TreeDecomposition, sol: LiftedSolution, order: Sequence[int]):
        self.T = T
        self.order = tuple(order)
        parents = _traversal_parents(T, self.order)
        self.n = max(T.vertices(), default=-1) + 1
        self.tables = []
        for v in self.order:
            p = parents[v]
            plus = () if p < 0 else tuple(sorted(T.bags[v] & T.bags[p]))
            self.tables.append(_Table(bag_marginal(sol, v), plus, v))

    def run(self, seed: int) -> RoundingRun:
        rng = random.Random(seed)
        f = [0] * self.n
        choices = []
        for tab in self.tables:
            key = 0
            for k, v in enumerate(tab.plus):
                key |= f[v] << k
            sub = tab.draw(rng, key)
            for k, v in enumerate(tab.minus):
                f[v] = sub >> k & 1
            choices.append((tab.node, key, sub))
        return RoundingRun(seed, self.order, tuple(f), tuple(choices))


def sc_round(T: TreeDecomposition, sol: LiftedSolution, start_node: int, seed: int) -> RoundingRun:
    """One run of the rounding, visiting bags breadth-first from ``start_node``."""
    return Rounder(T, sol, traversal_order(T, start_node)).run(seed)


@dataclass(frozen=True)
class RepeatedResult:
    assignment: tuple[int, ...]
    sparsity: Fraction
    good_fraction: Fraction
    trials: int
    degenerate: int


def repeated_round(
    inst: CutInstance,
    T: TreeDecomposition,
    sol: LiftedSolution,
    trials: int,
    seed: int,
    c=1,
    start_node: int | None = None,
) -> RepeatedResult:
    """Best of ``trials`` independent roundings, by exact sparsity.

    A run is *good* when it separates some demand and
    ``cap - (alpha / c) * dem <= 0``; ``good_fraction`` counts those over all
    trials.  Ties keep the earliest run.
    """
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    rounder = Rounder(T, sol, traversal_order(T, T.root if start_node is None else start_node))
    threshold = Fraction(sol.alpha) / Fraction(c)
    best = None
    good = degenerate = 0
    for trial in range(trials):
        f = rounder.run(derive_seed(seed, trial)).assignment
        f = f + (0,) * (inst.n - len(f))
        dem = cut_value(inst.dem_edges, f)
        if dem == 0:
            degenerate += 1
            continue
        cap = cut_value(inst.cap_edges, f)
        if cap <= threshold * dem:
            good += 1
        value = cap / dem
        if best is None or value < best[1]:
            best = (f, value)
    if best is None:
        raise AllRunsDegenerate(f"none of {trials} runs separated a demand pair")
    return RepeatedResult(best[0], best[1], Fraction(good, trials), trials, degenerate)


def algcut_estimate(
    T: TreeDecomposition, sol: LiftedSolution, s: int, t: int, trials: int, seed: int,
    start_node: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo ``Pr[f(s) != f(t)]`` with a 95% normal-approximation half-width."""
    if s == t:
        return 0.0, 0.0
    rounder = Rounder(T, sol, traversal_order(T, T.root if start_node is None else start_node))
    hits = 0
    for trial in range(trials):
        f = rounder.run(derive_seed(seed, trial)).assignment
        hits += f[s] != f[t]
    p = hits / trials
    return p, 1.96 * math.sqrt(p * (1 - p) / trials)


# ---------------------------------------------------------------------------
# exact path computations


def pair_path(T: TreeDecomposition, s: int, t: int) -> DecPath:
    """Shortest bag path from a bag holding ``s`` to a bag holding ``t``."""
    s_nodes = T.nodes_containing(s)
    t_nodes = set(T.nodes_containing(t))
    if not s_nodes or not t_nodes:
        raise EndpointNotInBag(f"no bag contains {s if not s_nodes else t}")
    prev = {v: -1 for v in s_nodes}
    frontier = deque(s_nodes)
    while frontier:
        v = frontier.popleft()
        if v in t_nodes:
            nodes = [v]
            while prev[nodes[-1]] >= 0:
                nodes.append(prev[nodes[-1]])
            nodes.reverse()
            return DecPath(tuple(nodes), tuple(T.bags[i] for i in nodes))
        for w in T.adjacency[v]:
            if w not in prev:
                prev[w] = v
                frontier.append(w)
    raise PairNotConnected(f"no bag path joins {s} and {t}")


def simplified_pair_path(T: TreeDecomposition, s: int, t: int, method: str = "exact") -> DecPath:
    path = pair_path(T, s, t)
    if method == "exact":
        return simplify_exact(path).final
    if method == "greedy":
        return simplify_greedy(path).final
    if method == "raw":
        return path
    raise InvalidParams(f"unknown simplification {method!r}")


@dataclass(frozen=True)
class PathLayers:
    """Markov chain of labels on consecutive bag intersections.

    ``sets[i]`` is the conditioning set ``I_i``; ``probs[i][mask]`` is the
    probability of that labelling of ``I_i``; ``joints[i]`` maps
    ``(mask_i, mask_{i+1})`` to the joint probability, read off the bag of
    ``nodes[i]``.
    """

    nodes: tuple[int, ...]
    sets: tuple[tuple[int, ...], ...]
    probs: tuple[tuple, ...]
    joints: tuple[dict, ...]

    @property
    def ell(self) -> int:
        return len(self.joints)


def _restrict(mask: int, domain: Sequence[int], sub: Sequence[int]) -> int:
    return sum((mask >> domain.index(v) & 1) << k for k, v in enumerate(sub))


def path_layers(path: DecPath, sol: LiftedSolution, s: int, t: int) -> PathLayers:
    """Conditioning sets ``{s}, B_1 & B_2, ..., {t}`` and their transition joints.

    With ``s == t`` the chain has a single layer and no transitions.
    """
    if s not in path.bags[0]:
        raise EndpointNotInBag(f"{s} is not in the first bag of the path")
    if t not in path.bags[-1]:
        raise EndpointNotInBag(f"{t} is not in the last bag of the path")
    first = bag_marginal(sol, path.nodes[0]).marginal((s,))
    if s == t:
        return PathLayers(path.nodes[:1], ((s,),), (first.probs,), ())
    sets = [(s,)]
    for a, b in zip(path.bags, path.bags[1:]):
        sets.append(tuple(sorted(a & b)))
    sets.append((t,))
    if max(len(I) for I in sets) > MAX_LAYER_BITS:
        raise TooLarge(f"a conditioning set exceeds {MAX_LAYER_BITS} vertices")
    joints = []
    probs = []
    for i, node in enumerate(path.nodes):
        I, J = sets[i], sets[i + 1]
        dist = bag_marginal(sol, node).marginal(set(I) | set(J))
        joint: dict[tuple[int, int], object] = {}
        marg = [0 * dist.probs[0]] * (1 << len(I))
        for mask, p in enumerate(dist.probs):
            if p:
                a = _restrict(mask, dist.domain, I)
                b = _restrict(mask, dist.domain, J)
                joint[(a, b)] = joint.get((a, b), 0) + p
                marg[a] += p
        joints.append(joint)
        probs.append(tuple(marg))
    last = bag_marginal(sol, path.nodes[-1]).marginal((t,))
    probs.append(last.probs)
    return PathLayers(path.nodes, tuple(sets), tuple(probs), tuple(joints))


def endpoint_joint(layers: PathLayers) -> dict[tuple[int, int], object]:
    """Joint law of ``(f(s), f(t))`` under the chain, by a forward pass."""
    if layers.ell == 0:
        p = layers.probs[0]
        return {(0, 0): p[0], (1, 1): p[1], (0, 1): 0 * p[0], (1, 0): 0 * p[0]}
    out = {}
    for a0 in (0, 1):
        q = {a0: layers.probs[0][a0]}
        for i, joint in enumerate(layers.joints):
            nxt: dict[int, object] = {}
            pi = layers.probs[i]
            for (a, b), w in joint.items():
                if a in q and q[a]:
                    nxt[b] = nxt.get(b, 0) + q[a] * w / pi[a]
            q = nxt
        for b in (0, 1):
            out[(a0, b)] = q.get(b, 0 * layers.probs[0][0])
    return out


def algcut_exact(
    T: TreeDecomposition,
    sol: LiftedSolution,
    s: int,
    t: int,
    path: DecPath | None = None,
    orientation: tuple[int, int] | None = None,
):
    """Exact probability that the rounding separates ``s`` and ``t``.

    By default the chain runs along the exactly simplified shortest bag path.
    ``orientation=(a, b)`` returns ``Pr[f(s) = a and f(t) = b]`` instead.
    """
    if path is None:
        path = simplified_pair_path(T, s, t)
    joint = endpoint_joint(path_layers(path, sol, s, t))
    if orientation is not None:
        return joint[tuple(orientation)]
    return joint[(0, 1)] + joint[(1, 0)]


def assignment_distribution(
    T: TreeDecomposition, sol: LiftedSolution, order: Sequence[int], max_states: int = 1 << 16
) -> dict[tuple[int, ...], object]:
    """Exact law of the full labelling produced by the rounding along ``order``.

    Keys are label tuples over the sorted vertex set of ``T``.  Intended for
    small fixtures only.
    """
    parents = _traversal_parents(T, order)
    verts = sorted(T.vertices())
    pos = {v: j for j, v in enumerate(verts)}
    states: dict[tuple[int, ...], object] = {}
    first = bag_marginal(sol, order[0])
    for mask, p in enumerate(first.probs):
        if p:
            f = [0] * len(verts)
            for j, v in enumerate(first.domain):
                f[pos[v]] = mask >> j & 1
            states[tuple(f)] = p
    for v in order[1:]:
        tab = _Table(bag_marginal(sol, v), tuple(sorted(T.bags[v] & T.bags[parents[v]])), v)
        dist = bag_marginal(sol, v)
        plus_dist = dist.marginal(tab.plus)
        nxt: dict[tuple[int, ...], object] = {}
        for f, p in states.items():
            key = sum(f[pos[u]] << k for k, u in enumerate(tab.plus))
            denom = plus_dist.probs[key]
            if not denom:
                raise ZeroProbabilityCondition(f"node {v}: conditioning event has probability 0")
            for mask, q in enumerate(dist.probs):
                if not q:
                    continue
                labels = {u: mask >> j & 1 for j, u in enumerate(dist.domain)}
                if any(labels[u] != f[pos[u]] for u in tab.plus):
                    continue
                g = list(f)
                for u in tab.minus:
                    g[pos[u]] = labels[u]
                g = tuple(g)
                nxt[g] = nxt.get(g, 0) + p * q / denom
        states = nxt
        if len(states) > max_states:
            raise TooLarge(f"more than {max_states} labellings in the exact distribution")
    return states


def separation_from_distribution(dist: dict[tuple[int, ...], object], T: TreeDecomposition, s: int, t: int):
    verts = sorted(T.vertices())
    js, jt = verts.index(s), verts.index(t)
    return sum((p for f, p in dist.items() if f[js] != f[jt]), Fraction(0))
