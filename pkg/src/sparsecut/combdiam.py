"""Redundant bags, path simplification and combinatorial length/diameter.

A decomposition path ``v_1 .. v_m`` can be shortened by *bypassing* an
interior node ``v`` whose bag meets one neighbour only inside the other
neighbour's bag.  The combinatorial length of a path is the shortest length
reachable by such bypasses; the combinatorial diameter of a decomposition is
the largest combinatorial length over all pairs of nodes.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from itertools import combinations

from .errors import Exceeded, IndexOutOfRange, InvalidParams
from .treedec import TreeDecomposition, tree_path

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class DecPath:
    """A sequence of decomposition nodes with their bags."""

    nodes: tuple[int, ...]
    bags: tuple[frozenset[int], ...]

    def __post_init__(self):
        if len(self.nodes) != len(self.bags) or not self.nodes:
            raise InvalidParams("a path needs one bag per node and at least one node")

    @classmethod
    def from_tree(cls, T: TreeDecomposition, s_node: int, t_node: int) -> "DecPath":
        nodes = tuple(tree_path(T, s_node, t_node))
        return cls(nodes, tuple(T.bags[i] for i in nodes))

    @classmethod
    def from_bags(cls, bags: Sequence[Sequence[int]]) -> "DecPath":
        return cls(tuple(range(len(bags))), tuple(frozenset(b) for b in bags))

    @property
    def length(self) -> int:
        return len(self.nodes) - 1

    @property
    def s_node(self) -> int:
        return self.nodes[0]

    @property
    def t_node(self) -> int:
        return self.nodes[-1]

    def bypass(self, idx: int) -> "DecPath":
        return DecPath(self.nodes[:idx] + self.nodes[idx + 1 :], self.bags[:idx] + self.bags[idx + 1 :])

    def subpath(self, keep: Sequence[int]) -> "DecPath":
        return DecPath(tuple(self.nodes[i] for i in keep), tuple(self.bags[i] for i in keep))


@dataclass(frozen=True)
class SimplificationTrace:
    initial: DecPath
    bypassed: tuple[int, ...]
    final: DecPath

    @property
    def final_length(self) -> int:
        return self.final.length


def _redundant(prev: frozenset, mid: frozenset, nxt: frozenset) -> bool:
    # either labelling of the two neighbours may play the role of u
    return (mid & nxt) <= prev or (mid & prev) <= nxt


def is_redundant(path: DecPath, idx: int) -> bool:
    """Whether the interior node at ``idx`` can be bypassed."""
    if not 0 < idx < path.length:
        raise IndexOutOfRange(f"index {idx} is not interior to a path of length {path.length}")
    return _redundant(path.bags[idx - 1], path.bags[idx], path.bags[idx + 1])


def simplify_greedy(path: DecPath) -> SimplificationTrace:
    """Bypass the lowest-index redundant node until none is left."""
    current = path
    bypassed = []
    idx = 1
    while idx < current.length:
        if is_redundant(current, idx):
            bypassed.append(current.nodes[idx])
            current = current.bypass(idx)
            # the left neighbour may have become redundant
            idx = max(1, idx - 1)
        else:
            idx += 1
    return SimplificationTrace(path, tuple(bypassed), current)


def apply_bypasses(path: DecPath, bypassed: Sequence[int]) -> DecPath:
    """Replay a bypass sequence, checking redundancy at every step."""
    current = path
    for node in bypassed:
        idx = current.nodes.index(node)
        if not is_redundant(current, idx):
            raise InvalidParams(f"node {node} is not redundant when bypassed")
        current = current.bypass(idx)
    return current


def simplify_exact(path: DecPath, node_budget: int = DEFAULT_BUDGET) -> SimplificationTrace:
    """A bypass sequence reaching the minimum possible length.

    States are the sets of surviving positions, encoded as bitmasks; the
    order in which the same set was reached does not matter because
    redundancy only looks at the current path.
    """
    m = len(path.nodes)
    if m <= 2:
        return SimplificationTrace(path, (), path)
    bags = path.bags
    start = (1 << m) - 1
    came_from: dict[int, tuple[int, int]] = {start: (-1, -1)}
    best_state, best = start, m - 1
    stack = [start]
    while stack and best > 1:
        state = stack.pop()
        alive = [i for i in range(m) if state >> i & 1]
        for j in range(1, len(alive) - 1):
            a, b, c = alive[j - 1], alive[j], alive[j + 1]
            if not _redundant(bags[a], bags[b], bags[c]):
                continue
            nxt = state & ~(1 << b)
            if nxt in came_from:
                continue
            came_from[nxt] = (state, b)
            if len(came_from) > node_budget:
                raise Exceeded(f"more than {node_budget} states explored")
            if len(alive) - 2 < best:
                best_state, best = nxt, len(alive) - 2
            stack.append(nxt)
    removed = []
    state = best_state
    while state != start:
        state, pos = came_from[state]
        removed.append(path.nodes[pos])
    removed.reverse()
    keep = [i for i in range(m) if best_state >> i & 1]
    return SimplificationTrace(path, tuple(removed), path.subpath(keep))


def combinatorial_length_exact(path: DecPath, node_budget: int = DEFAULT_BUDGET) -> int:
    """Minimum final length over every bypass sequence (see :func:`simplify_exact`)."""
    return simplify_exact(path, node_budget).final_length


def combinatorial_diameter(
    T: TreeDecomposition, method: str = "greedy", budget: int = DEFAULT_BUDGET
) -> tuple[int, tuple[int, int]]:
    """Largest combinatorial length over all node pairs, with an attaining pair.

    ``method="greedy"`` gives an upper bound from :func:`simplify_greedy`;
    ``method="exact"`` runs :func:`combinatorial_length_exact` per pair.
    """
    if method not in ("greedy", "exact"):
        raise InvalidParams(f"unknown method {method!r}")
    best, witness = 0, (T.root, T.root)
    for u, v in combinations(T.nodes, 2):
        path = DecPath.from_tree(T, u, v)
        if path.length <= best:
            continue
        if method == "greedy":
            length = simplify_greedy(path).final_length
        else:
            length = combinatorial_length_exact(path, budget)
        if length > best:
            best, witness = length, (u, v)
    return best, witness
