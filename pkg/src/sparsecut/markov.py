"""Layered flow graph of the rounding walk along a bag path, and its diagnostics.

Layer ``i`` holds every labelling of the conditioning set ``I_i``; an edge
from layer ``i`` to ``i + 1`` carries the probability that the walk uses it.
On top of that graph this module computes the explicit LP flow from
``s_0`` (``f(s) = 0``) to ``t_1`` (``f(t) = 1``), exact max flows, the bias
potential ``A`` with its variance profile ``phi``, and checks the
inequalities that tie the rounding probability to the LP value.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .combdiam import DecPath
from .errors import PairNotCovered
from .lifting import LiftedSolution
from .rounding import PathLayers, _restrict, endpoint_joint, path_layers

Node = tuple[int, int]  # (layer, mask)


@dataclass
class MarkovFlowGraph:
    path: DecPath
    s: int
    t: int
    layers: PathLayers
    sol: LiftedSolution | None = field(default=None, repr=False)

    @property
    def ell(self) -> int:
        return self.layers.ell

    @property
    def sets(self) -> tuple[tuple[int, ...], ...]:
        return self.layers.sets

    def layer_sizes(self) -> list[int]:
        return [1 << len(I) for I in self.sets]

    def weights(self, i: int) -> dict[tuple[int, int], Fraction]:
        """Edge weights between layer ``i`` and ``i + 1`` (zero edges omitted)."""
        return self.layers.joints[i]

    def edges(self):
        for i, joint in enumerate(self.layers.joints):
            for (a, b), w in joint.items():
                if w:
                    yield (i, a), (i + 1, b), w

    def prob(self, node: Node):
        i, mask = node
        return self.layers.probs[i][mask]

    @property
    def s0(self) -> Node:
        return (0, 0)

    @property
    def s1(self) -> Node:
        return (0, 1)

    @property
    def t0(self) -> Node:
        return (self.ell, 0)

    @property
    def t1(self) -> Node:
        return (self.ell, 1)


def build_H(path: DecPath, sol: LiftedSolution, s: int, t: int) -> MarkovFlowGraph:
    return MarkovFlowGraph(path, s, t, path_layers(path, sol, s, t), sol)


def walk_marginals(H: MarkovFlowGraph) -> list[list[Fraction]]:
    """Law of ``X_i`` obtained by pushing ``X_0`` through the transition kernels."""
    probs = H.layers.probs
    cur = list(probs[0])
    out = [cur]
    for i, joint in enumerate(H.layers.joints):
        nxt = [Fraction(0)] * len(probs[i + 1])
        for (a, b), w in joint.items():
            if probs[i][a]:
                nxt[b] += cur[a] * w / probs[i][a]
        out.append(nxt)
        cur = nxt
    return out


# ---------------------------------------------------------------------------
# flows


@dataclass
class FlowCheck:
    flow: dict[tuple[Node, Node], Fraction]
    value: Fraction
    conservation_residual: Fraction
    capacity_violations: int


def lp_flow(H: MarkovFlowGraph, sol: LiftedSolution | None = None) -> FlowCheck:
    """Explicit ``s_0 -> t_1`` flow read from the lifted distributions of the pair.

    ``g(f_i, f_{i+1}) = Pr[f(s) = 0, f(t) = 1, f|I_i = f_i, f|I_{i+1} = f_{i+1}]``
    under the distribution attached to ``(path node i, demand {s, t})``.
    """
    sol = sol if sol is not None else H.sol
    e = sol.demand_index(H.s, H.t)
    if e is None:
        raise PairNotCovered(f"({H.s}, {H.t}) is not a demand pair")
    flow: dict[tuple[Node, Node], Fraction] = {}
    sets = H.sets
    for i, node in enumerate(H.path.nodes):
        dist = sol.local(node, e)
        js, jt = dist.domain.index(H.s), dist.domain.index(H.t)
        for mask, p in enumerate(dist.probs):
            if not p or mask >> js & 1 or not mask >> jt & 1:
                continue
            a = _restrict(mask, dist.domain, sets[i])
            b = _restrict(mask, dist.domain, sets[i + 1])
            key = ((i, a), (i + 1, b))
            flow[key] = flow.get(key, 0) + p
    if H.ell == 0:
        return FlowCheck({}, Fraction(0), Fraction(0), 0)
    net: dict[Node, Fraction] = {}
    for (u, v), g in flow.items():
        net[u] = net.get(u, 0) - g
        net[v] = net.get(v, 0) + g
    residual = sum((abs(x) for u, x in net.items() if 0 < u[0] < H.ell), Fraction(0))
    caps = H.layers.joints
    violations = sum(1 for ((i, a), (_, b)), g in flow.items() if g > caps[i].get((a, b), 0))
    value = sum((g for (u, _), g in flow.items() if u[0] == 0), Fraction(0))
    return FlowCheck(flow, value, residual, violations)


def max_flow(H: MarkovFlowGraph, source: Node, sink: Node) -> tuple[Fraction, set[Node]]:
    """Exact max flow by shortest augmenting paths; also returns the source side of a min cut."""
    cap: dict[Node, dict[Node, Fraction]] = {}

    def add(u, v, c):
        cap.setdefault(u, {})
        cap.setdefault(v, {})
        cap[u][v] = cap[u].get(v, 0) + c
        cap[v].setdefault(u, 0)

    for u, v, w in H.edges():
        add(u, v, Fraction(w))
    total = Fraction(0)
    if source not in cap or sink not in cap:
        return total, {source}
    while True:
        prev = {source: None}
        queue = deque([source])
        while queue and sink not in prev:
            u = queue.popleft()
            for v, c in cap[u].items():
                if c > 0 and v not in prev:
                    prev[v] = u
                    queue.append(v)
        if sink not in prev:
            return total, set(prev)
        bottleneck = None
        v = sink
        while prev[v] is not None:
            u = prev[v]
            bottleneck = cap[u][v] if bottleneck is None else min(bottleneck, cap[u][v])
            v = u
        v = sink
        while prev[v] is not None:
            u = prev[v]
            cap[u][v] -= bottleneck
            cap[v][u] += bottleneck
            v = u
        total += bottleneck


# ---------------------------------------------------------------------------
# potential


@dataclass
class PotentialProfile:
    A: dict[Node, Fraction]
    phi: list[Fraction]

    def is_monotone(self) -> bool:
        return all(a >= b for a, b in zip(self.phi, self.phi[1:]))


def potential_profile(H: MarkovFlowGraph) -> PotentialProfile:
    """``A(v) = Pr[X_0 = s_0 | X_i = v] - 1/2`` and ``phi(i) = Var A(X_i)``.

    Nodes of probability zero get ``A = 0``.
    """
    probs = H.layers.probs
    half = Fraction(1, 2)
    # q[mask] = Pr[X_0 = s_0, X_i = mask]
    q = {0: probs[0][0]}
    A: dict[Node, Fraction] = {}
    phi = []
    for i in range(H.ell + 1):
        if i > 0:
            nxt: dict[int, Fraction] = {}
            for (a, b), w in H.layers.joints[i - 1].items():
                if a in q and q[a]:
                    nxt[b] = nxt.get(b, 0) + q[a] * w / probs[i - 1][a]
            q = nxt
        mean = second = Fraction(0)
        for mask, p in enumerate(probs[i]):
            a = q.get(mask, 0) / p - half if p else Fraction(0)
            A[(i, mask)] = a
            mean += p * a
            second += p * a * a
        phi.append(second - mean * mean)
    return PotentialProfile(A, phi)


# ---------------------------------------------------------------------------
# lemma checks


@dataclass
class LemmaReport:
    ell: int
    layer_sizes: list[int]
    p_s0_t1: Fraction
    phi: list[Fraction]
    phi_monotone: bool
    A_t1: Fraction
    variance_slack: Fraction  # 2 p - (phi_0 - phi_l)
    rho: Fraction | None
    threshold_weight: Fraction | None
    threshold_bound: Fraction | None
    separates: bool | None
    mincut: Fraction
    mincut_bound: Fraction | None  # (phi_0 - phi_l) * 4 l^2, when A(t_1) < 0
    flow_value: Fraction | None = None
    conservation_residual: Fraction | None = None
    capacity_violations: int | None = None
    lp_pair_prob: Fraction | None = None
    point_i_bound: Fraction | None = None  # what p must reach under the proved constant
    point_i_stated_bound: Fraction | None = None  # the same with 4 l^2 in place of 8 l^2
    walk_consistent: bool = True

    @property
    def point_i_ok(self) -> bool:
        return self.point_i_bound is None or self.p_s0_t1 >= self.point_i_bound

    @property
    def point_i_stated_ok(self) -> bool:
        return self.point_i_stated_bound is None or self.p_s0_t1 >= self.point_i_stated_bound

    def violations(self) -> list[str]:
        bad = []
        if self.variance_slack < 0:
            bad.append("variance drop")
        if self.threshold_weight is not None and self.threshold_weight > self.threshold_bound:
            bad.append("threshold weight")
        if self.separates is False:
            bad.append("threshold cut does not separate")
        if self.mincut_bound is not None and self.mincut > self.mincut_bound:
            bad.append("min cut bound")
        if self.flow_value is not None:
            if self.conservation_residual != 0:
                bad.append("flow conservation")
            if self.capacity_violations:
                bad.append("flow capacity")
            if self.flow_value != self.lp_pair_prob:
                bad.append("flow value")
            if self.mincut < self.flow_value:
                bad.append("max flow below lp flow")
        if not self.point_i_ok:
            bad.append("point (i)")
        if not self.walk_consistent:
            bad.append("walk marginals")
        return bad

    @property
    def ok(self) -> bool:
        return not self.violations()


def _reachable(H: MarkovFlowGraph, source: Node, removed: set) -> set[Node]:
    out: dict[Node, list[Node]] = {}
    for u, v, _ in H.edges():
        if (u, v) not in removed:
            out.setdefault(u, []).append(v)
    seen = {source}
    stack = [source]
    while stack:
        u = stack.pop()
        for v in out.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def check_lemmas(H: MarkovFlowGraph, sol: LiftedSolution | None = None) -> LemmaReport:
    """Evaluate every flow, potential and cut inequality on ``H`` exactly.

    With a solution available (``sol`` or the one ``H`` was built from) and
    ``{s, t}`` a demand pair, the explicit LP flow is checked as well.
    """
    sol = sol if sol is not None else H.sol
    ell = H.ell
    prof = potential_profile(H)
    joint = endpoint_joint(H.layers)
    p = Fraction(joint[(0, 1)])
    drop = prof.phi[0] - prof.phi[-1]
    a_t1 = prof.A[H.t1]
    mincut, _ = max_flow(H, H.s0, H.t1) if ell else (Fraction(0), set())

    rho = weight = bound = separates = mincut_bound = None
    if ell:
        rho = Fraction(1, 2 * ell)
        C = {(u, v) for u, v, _ in H.edges() if abs(prof.A[u] - prof.A[v]) >= rho}
        weight = sum((Fraction(w) for u, v, w in H.edges() if (u, v) in C), Fraction(0))
        bound = drop / (rho * rho)
        if a_t1 < 0:
            separates = H.t1 not in _reachable(H, H.s0, C)
            mincut_bound = drop * 4 * ell * ell
    report = LemmaReport(
        ell=ell,
        layer_sizes=H.layer_sizes(),
        p_s0_t1=p,
        phi=prof.phi,
        phi_monotone=prof.is_monotone(),
        A_t1=a_t1,
        variance_slack=2 * p - drop,
        rho=rho,
        threshold_weight=weight,
        threshold_bound=bound,
        separates=separates,
        mincut=mincut,
        mincut_bound=mincut_bound,
    )
    walk = walk_marginals(H)
    report.walk_consistent = all(
        list(map(Fraction, w)) == list(map(Fraction, pr)) for w, pr in zip(walk, H.layers.probs)
    )
    if sol is not None and ell and sol.demand_index(H.s, H.t) is not None:
        fc = lp_flow(H, sol)
        report.flow_value = fc.value
        report.conservation_residual = fc.conservation_residual
        report.capacity_violations = fc.capacity_violations
        e = sol.demand_index(H.s, H.t)
        pair = sol.local(sol.T.root, e).marginal((H.s, H.t))
        report.lp_pair_prob = Fraction(pair.prob({H.s: 0, H.t: 1}))
    if ell:
        if a_t1 < 0:
            report.point_i_bound = mincut / (8 * ell * ell)
            report.point_i_stated_bound = mincut / (4 * ell * ell)
        elif report.lp_pair_prob is not None:
            report.point_i_bound = report.point_i_stated_bound = report.lp_pair_prob / 2
    return report

