"""Rooted tree decompositions: representation, validation, construction, balancing.

Decomposition nodes are the integers ``0..N-1``; node ``i`` carries the bag
``bags[i]``.  The tree is given by an undirected edge list plus a root, from
which parent pointers, levels and depth are derived lazily.
"""

from __future__ import annotations

import json
import math
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx
from networkx.algorithms.approximation import treewidth_min_fill_in

from .errors import InvalidParams


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple[frozenset[int], ...]
    tree_edges: tuple[tuple[int, int], ...] = ()
    root: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(frozenset(b) for b in self.bags))
        object.__setattr__(
            self, "tree_edges", tuple((min(a, b), max(a, b)) for a, b in self.tree_edges)
        )
        if not 0 <= self.root < max(len(self.bags), 1):
            raise InvalidParams(f"root {self.root} is not a node")

    @classmethod
    def from_parents(cls, bags: Sequence[Iterable[int]], parents: Sequence[int]) -> "TreeDecomposition":
        """Build from a parent list; the unique node with parent -1 is the root."""
        roots = [i for i, p in enumerate(parents) if p < 0]
        if len(roots) != 1:
            raise InvalidParams(f"expected exactly one root, found {len(roots)}")
        edges = tuple((p, i) for i, p in enumerate(parents) if p >= 0)
        return cls(tuple(frozenset(b) for b in bags), edges, roots[0])

    def with_bags(self, bags: Sequence[Iterable[int]]) -> "TreeDecomposition":
        """Same tree and root, new bags (used by the shallow constructions)."""
        return TreeDecomposition(tuple(frozenset(b) for b in bags), self.tree_edges, self.root)

    def rerooted(self, root: int) -> "TreeDecomposition":
        return TreeDecomposition(self.bags, self.tree_edges, root)

    @property
    def num_nodes(self) -> int:
        return len(self.bags)

    @property
    def nodes(self) -> range:
        return range(len(self.bags))

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.bags]
        for a, b in self.tree_edges:
            adj[a].append(b)
            adj[b].append(a)
        return tuple(tuple(sorted(x)) for x in adj)

    @cached_property
    def _rooting(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        parent = [-2] * len(self.bags)
        level = [0] * len(self.bags)
        parent[self.root] = -1
        order = [self.root]
        queue = deque(order)
        while queue:
            x = queue.popleft()
            for y in self.adjacency[x]:
                if parent[y] == -2:
                    parent[y] = x
                    level[y] = level[x] + 1
                    order.append(y)
                    queue.append(y)
        if len(order) != len(self.bags) or len(self.tree_edges) != len(self.bags) - 1:
            raise InvalidParams("tree_edges do not form a tree on the nodes")
        return tuple(parent), tuple(level), tuple(order)

    @property
    def parent(self) -> tuple[int, ...]:
        """``parent[i]`` is p(i); the root maps to -1."""
        return self._rooting[0]

    @property
    def levels(self) -> tuple[int, ...]:
        return self._rooting[1]

    @property
    def bfs_order(self) -> tuple[int, ...]:
        return self._rooting[2]

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.bags]
        for i, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(i)
        return tuple(tuple(k) for k in kids)

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    @property
    def depth(self) -> int:
        return max(self.levels, default=0)

    def vertices(self) -> frozenset[int]:
        return frozenset().union(*self.bags)

    def nodes_containing(self, v: int) -> list[int]:
        return [i for i, b in enumerate(self.bags) if v in b]

    def strip_empty(self) -> "TreeDecomposition":
        """Drop empty bags, reattaching their neighbours to a surviving node.

        An empty bag separates nothing, so gluing its neighbours together keeps
        every vertex subtree connected.
        """
        if all(self.bags) or not any(self.bags):
            return self
        adj = {i: set(a) for i, a in enumerate(self.adjacency)}
        for x in [i for i, b in enumerate(self.bags) if not b]:
            nbrs = sorted(adj.pop(x))
            for y in nbrs:
                adj[y].discard(x)
            for y in nbrs[1:]:
                adj[nbrs[0]].add(y)
                adj[y].add(nbrs[0])
        keep = sorted(adj)
        remap = {old: new for new, old in enumerate(keep)}
        edges = {(min(remap[a], remap[b]), max(remap[a], remap[b])) for a in adj for b in adj[a]}
        root = self.root if self.bags[self.root] else keep[0]
        return TreeDecomposition(tuple(self.bags[i] for i in keep), tuple(sorted(edges)), remap[root])


def bag_union(T: TreeDecomposition, X: Iterable[int]) -> frozenset[int]:
    """Union of the bags of the nodes in ``X``."""
    return frozenset().union(*(T.bags[i] for i in X))


def tree_path(T: TreeDecomposition, i: int, j: int) -> list[int]:
    """Nodes on the unique tree path from ``i`` to ``j``, both inclusive."""
    parent, level = T.parent, T.levels
    left, right = [i], [j]
    a, b = i, j
    while level[a] > level[b]:
        a = parent[a]
        left.append(a)
    while level[b] > level[a]:
        b = parent[b]
        right.append(b)
    while a != b:
        a, b = parent[a], parent[b]
        left.append(a)
        right.append(b)
    right.pop()
    return left + right[::-1]


def lca(T: TreeDecomposition, i: int, j: int) -> int:
    parent, level = T.parent, T.levels
    while level[i] > level[j]:
        i = parent[i]
    while level[j] > level[i]:
        j = parent[j]
    while i != j:
        i, j = parent[i], parent[j]
    return i


def level(T: TreeDecomposition, v: int) -> int:
    """Number of edges between node ``v`` and the root."""
    return T.levels[v]


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    not_tree: str | None = None
    unknown_vertices: list[int] = field(default_factory=list)
    uncovered_vertices: list[int] = field(default_factory=list)
    uncovered_edges: list[tuple[int, int]] = field(default_factory=list)
    disconnected_vertices: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.not_tree
            or self.unknown_vertices
            or self.uncovered_vertices
            or self.uncovered_edges
            or self.disconnected_vertices
        )

    def violations(self) -> list[str]:
        out = []
        if self.not_tree:
            out.append(f"not a tree: {self.not_tree}")
        out += [f"vertex {v} is not in range(n)" for v in self.unknown_vertices]
        out += [f"vertex {v} is in no bag" for v in self.uncovered_vertices]
        out += [f"edge {e} is in no bag" for e in self.uncovered_edges]
        out += [f"bags containing {v} are disconnected" for v in self.disconnected_vertices]
        return out


def _tree_problem(T: TreeDecomposition) -> str | None:
    N = T.num_nodes
    if N == 0:
        return "no nodes"
    for a, b in T.tree_edges:
        if not (0 <= a < N and 0 <= b < N) or a == b:
            return f"bad tree edge ({a}, {b})"
    if len(set(T.tree_edges)) != len(T.tree_edges):
        return "duplicate tree edge"
    if len(T.tree_edges) != N - 1:
        return f"{len(T.tree_edges)} edges for {N} nodes"
    g = nx.Graph()
    g.add_nodes_from(range(N))
    g.add_edges_from(T.tree_edges)
    if not nx.is_connected(g):
        return "tree edges leave the nodes disconnected"
    return None


def validate(G, T: TreeDecomposition) -> ValidationReport:
    """Check the decomposition properties of ``T`` against the graph of ``G``.

    ``G`` is anything with ``n`` and ``cap_edges`` (a :class:`CutInstance`).
    Every violated property is listed together with its witness.
    """
    report = ValidationReport(not_tree=_tree_problem(T))
    covered = T.vertices()
    report.unknown_vertices = sorted(v for v in covered if not 0 <= v < G.n)
    report.uncovered_vertices = [v for v in range(G.n) if v not in covered]
    for u, v, *_ in G.cap_edges:
        if not any(u in b and v in b for b in T.bags):
            report.uncovered_edges.append((u, v))
    if report.not_tree is None:
        adj = T.adjacency
        for v in sorted(covered):
            holders = [i for i, b in enumerate(T.bags) if v in b]
            seen = {holders[0]}
            stack = [holders[0]]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in seen and v in T.bags[y]:
                        seen.add(y)
                        stack.append(y)
            if len(seen) != len(holders):
                report.disconnected_vertices.append(v)
    return report


# ---------------------------------------------------------------------------
# construction


def contract_subset_bags(T: TreeDecomposition) -> TreeDecomposition:
    """Merge every node whose bag is contained in a neighbour's bag into it."""
    bags = {i: b for i, b in enumerate(T.bags)}
    adj = {i: set(a) for i, a in enumerate(T.adjacency)}
    changed = True
    while changed and len(bags) > 1:
        changed = False
        for x in sorted(bags):
            target = next((y for y in sorted(adj[x]) if bags[x] <= bags[y]), None)
            if target is None:
                continue
            for y in adj.pop(x):
                adj[y].discard(x)
                if y != target:
                    adj[y].add(target)
                    adj[target].add(y)
            del bags[x]
            changed = True
    keep = sorted(bags)
    remap = {old: new for new, old in enumerate(keep)}
    edges = sorted({(min(remap[a], remap[b]), max(remap[a], remap[b])) for a in adj for b in adj[a]})
    return TreeDecomposition(tuple(bags[i] for i in keep), tuple(edges), 0)


def min_fill_decomposition(G) -> TreeDecomposition:
    """Heuristic decomposition from a min-fill-in elimination ordering.

    Bags contained in a neighbouring bag are contracted away and node 0 is
    the root.  The width is an upper bound on the treewidth, not the exact
    value.
    """
    g = nx.Graph()
    g.add_nodes_from(range(G.n))
    g.add_edges_from((u, v) for u, v, *_ in G.cap_edges)
    _, decomp = treewidth_min_fill_in(g)
    bag_list = sorted(decomp.nodes, key=lambda b: (sorted(b), len(b)))
    index = {b: i for i, b in enumerate(bag_list)}
    edges = [(index[a], index[b]) for a, b in decomp.edges]
    # the heuristic returns a forest on disconnected input; glue the trees
    forest = nx.Graph()
    forest.add_nodes_from(range(len(bag_list)))
    forest.add_edges_from(edges)
    comps = sorted(min(c) for c in nx.connected_components(forest))
    edges += [(comps[0], c) for c in comps[1:]]
    return contract_subset_bags(TreeDecomposition(tuple(bag_list), tuple(edges), 0))


# ---------------------------------------------------------------------------
# balancing


def _components(adj, nodes: set[int]) -> list[set[int]]:
    out, seen = [], set()
    for s in sorted(nodes):
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in nodes and y not in comp:
                    comp.add(y)
                    stack.append(y)
        seen |= comp
        out.append(comp)
    return out


def _centroid(adj, comp: set[int]) -> int:
    best, best_size = None, None
    for x in sorted(comp):
        largest = max((len(c) for c in _components(adj, comp - {x})), default=0)
        if best_size is None or largest < best_size:
            best, best_size = x, largest
    return best


def _inner_path(adj, comp: set[int], a: int, b: int) -> list[int]:
    prev = {a: None}
    queue = deque([a])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y in comp and y not in prev:
                prev[y] = x
                queue.append(y)
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def balance(T: TreeDecomposition) -> TreeDecomposition:
    """Rebuild ``T`` as a shallow decomposition by recursive centroid splitting.

    Each recursive call handles a connected piece ``C`` of the original tree
    that touches the rest of the tree through at most two boundary nodes.  The
    chosen node gets its own bag plus the boundary vertices of ``C`` (a subset
    of the two boundary bags), so bags grow to at most ``3(w+1)``.  With one
    boundary node the piece is split at its centroid; with two, at the point
    of the boundary path nearest the centroid, which keeps the boundary count
    at two or less and halves the piece size at least every second level.
    Resulting depth is at most ``2*ceil(log2 N) + 1``.
    """
    adj = T.adjacency
    bags_out: list[frozenset[int]] = []
    parents_out: list[int] = []

    def build(comp: set[int], parent_new: int) -> None:
        boundary_edges = [(a, o) for a in sorted(comp) for o in adj[a] if o not in comp]
        boundary_nodes = sorted({a for a, _ in boundary_edges})
        shared = frozenset().union(*(T.bags[a] & T.bags[o] for a, o in boundary_edges))
        centre = _centroid(adj, comp)
        if len(boundary_nodes) == 2:
            path = _inner_path(adj, comp, boundary_nodes[0], boundary_nodes[1])
            on_path = set(path)
            if centre in on_path:
                x = centre
            else:
                # first path node reached walking from the centroid
                walk = _inner_path(adj, comp, centre, path[0])
                x = next(y for y in walk if y in on_path)
        else:
            x = centre
        me = len(bags_out)
        bags_out.append(T.bags[x] | shared)
        parents_out.append(parent_new)
        for sub in _components(adj, comp - {x}):
            build(sub, me)

    build(set(T.nodes), -1)
    return TreeDecomposition.from_parents(bags_out, parents_out)


# ---------------------------------------------------------------------------
# serialization


def decomposition_to_dict(T: TreeDecomposition) -> dict:
    T = T.strip_empty()
    parent = T.parent
    return {
        "root": T.root,
        "nodes": [
            {"id": i, "bag": sorted(b), "parent": (None if parent[i] < 0 else parent[i])}
            for i, b in enumerate(T.bags)
        ],
    }


def decomposition_from_dict(data: Mapping) -> TreeDecomposition:
    try:
        nodes = sorted(data["nodes"], key=lambda d: int(d["id"]))
        ids = [int(d["id"]) for d in nodes]
        remap = {old: new for new, old in enumerate(ids)}
        bags = [frozenset(int(v) for v in d["bag"]) for d in nodes]
        edges = [(remap[int(d["parent"])], remap[int(d["id"])]) for d in nodes if d["parent"] is not None]
        root = remap[int(data["root"])]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParams(f"malformed decomposition JSON: {exc}") from exc
    return TreeDecomposition(tuple(bags), tuple(edges), root)


def dumps_decomposition(T: TreeDecomposition) -> str:
    return json.dumps(decomposition_to_dict(T))


def loads_decomposition(text: str) -> TreeDecomposition:
    return decomposition_from_dict(json.loads(text))


def depth_bound(num_nodes: int) -> int:
    """Depth guaranteed by :func:`balance` for a tree with ``num_nodes`` nodes."""
    return 2 * math.ceil(math.log2(max(num_nodes, 1))) + 1
