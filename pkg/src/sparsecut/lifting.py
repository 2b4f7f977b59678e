"""Lifted LP of consistent local distributions and its ratio-objective solver.

For every decomposition node ``i`` and demand edge ``e = {s, t}`` there is a
distribution over assignments of ``L = B_i | {s, t}``.  The LP asks these to
be normalized, mirror-symmetric, consistent across tree edges on
``(B_i & B_j) | {s, t}`` and consistent across demands on ``B_i``.  The
ratio of expected cut capacity to expected separated demand is minimized by
Dinkelbach iteration over an exact simplex solver.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .errors import DegenerateDenominator, InconsistencyDetected, InvalidParams, PairNotCovered
from .instance import CutInstance
from .simplex import ExactSimplex, LinearProgram, solve_lp_float
from .treedec import TreeDecomposition

FLOAT_TOL = 1e-7


@dataclass(frozen=True)
class LocalDistribution:
    """Distribution over assignments of ``domain``.

    ``probs[mask]`` is the probability of the assignment giving label
    ``(mask >> j) & 1`` to ``domain[j]``.
    """

    domain: tuple[int, ...]
    probs: tuple

    def __post_init__(self):
        if len(self.probs) != 1 << len(self.domain):
            raise InvalidParams("need one probability per assignment")

    def index(self, assignment: Mapping[int, int]) -> int:
        return sum(assignment[v] << j for j, v in enumerate(self.domain))

    def prob(self, assignment: Mapping[int, int]):
        return self.probs[self.index(assignment)]

    def total(self):
        return sum(self.probs)

    def marginal(self, sub) -> "LocalDistribution":
        sub = tuple(sorted(sub))
        pos = [self.domain.index(v) for v in sub]
        out = [0 * self.probs[0]] * (1 << len(sub))
        for mask, p in enumerate(self.probs):
            if p:
                key = 0
                for k, j in enumerate(pos):
                    key |= (mask >> j & 1) << k
                out[key] += p
        return LocalDistribution(sub, tuple(out))

    def separation(self, u: int, v: int):
        """Probability that ``u`` and ``v`` get different labels."""
        if u == v:
            return 0 * self.probs[0]
        ju, jv = self.domain.index(u), self.domain.index(v)
        return sum(p for mask, p in enumerate(self.probs) if (mask >> ju ^ mask >> jv) & 1)

    def is_symmetric(self) -> bool:
        full = (1 << len(self.domain)) - 1
        return all(self.probs[m] == self.probs[m ^ full] for m in range(len(self.probs)))

    def as_dict(self) -> dict[tuple[int, ...], object]:
        n = len(self.domain)
        return {tuple(m >> j & 1 for j in range(n)): p for m, p in enumerate(self.probs)}


def _projection(domain: Sequence[int], sub: Sequence[int]) -> list[int]:
    pos = [domain.index(v) for v in sub]
    keys = []
    for mask in range(1 << len(domain)):
        key = 0
        for k, j in enumerate(pos):
            key |= (mask >> j & 1) << k
        keys.append(key)
    return keys


@dataclass
class LiftedLP:
    """The LP together with the map from (node, demand, mask) to columns."""

    lp: LinearProgram
    domains: dict[tuple[int, int], tuple[int, ...]]
    offsets: dict[tuple[int, int], int]
    numerator: list[Fraction]
    denominator: list[Fraction]
    demands: tuple[tuple[int, int], ...]

    def column(self, node: int, demand: int, mask: int) -> int:
        return self.offsets[(node, demand)] + mask


def _separation_coeffs(domain, u, v, weight, offset, out: list) -> None:
    ju, jv = domain.index(u), domain.index(v)
    for mask in range(1 << len(domain)):
        if (mask >> ju ^ mask >> jv) & 1:
            out[offset + mask] += weight


def build_lifted_lp(inst: CutInstance, T: TreeDecomposition) -> LiftedLP:
    """Variables and constraints of the lifted relaxation.

    Rows, in order: normalization per (node, demand); tree-edge marginal
    consistency per demand; same-node agreement of demands on the bag;
    mirror symmetry.  ``numerator``/``denominator`` are the linear forms of
    expected cut capacity and expected separated demand.
    """
    if not inst.dem_edges:
        raise DegenerateDenominator("instance has no demand edges")
    demands = tuple((s, t) for s, t, _ in inst.dem_edges)
    domains, offsets = {}, {}
    nvars = 0
    for i in T.nodes:
        for e, (s, t) in enumerate(demands):
            dom = tuple(sorted(T.bags[i] | {s, t}))
            domains[(i, e)] = dom
            offsets[(i, e)] = nvars
            nvars += 1 << len(dom)
    lp = LinearProgram(nvars, [Fraction(0)] * nvars)

    for key, dom in domains.items():
        off = offsets[key]
        lp.add_row({off + m: 1 for m in range(1 << len(dom))}, 1)

    def consistency(key_a, key_b, sub) -> None:
        da, db = domains[key_a], domains[key_b]
        pa, pb = _projection(da, sub), _projection(db, sub)
        rows = [dict() for _ in range(1 << len(sub))]
        for m, g in enumerate(pa):
            rows[g][offsets[key_a] + m] = 1
        for m, g in enumerate(pb):
            rows[g][offsets[key_b] + m] = -1
        for row in rows:
            lp.add_row(row, 0)

    for a, b in T.tree_edges:
        for e, (s, t) in enumerate(demands):
            sub = tuple(sorted((T.bags[a] & T.bags[b]) | {s, t}))
            consistency((a, e), (b, e), sub)
    for i in T.nodes:
        bag = tuple(sorted(T.bags[i]))
        for e in range(1, len(demands)):
            consistency((i, 0), (i, e), bag)
    for key, dom in domains.items():
        off, full = offsets[key], (1 << len(dom)) - 1
        for m in range(1 << len(dom)):
            if m < m ^ full:
                lp.add_row({off + m: 1, off + (m ^ full): -1}, 0)

    numerator = [Fraction(0)] * nvars
    for u, v, w in inst.cap_edges:
        node = next((i for i in T.nodes if u in T.bags[i] and v in T.bags[i]), None)
        if node is None:
            raise PairNotCovered(f"capacity edge ({u}, {v}) lies in no bag")
        _separation_coeffs(domains[(node, 0)], u, v, w, offsets[(node, 0)], numerator)
    denominator = [Fraction(0)] * nvars
    for e, (s, t, w) in enumerate(inst.dem_edges):
        _separation_coeffs(domains[(T.root, e)], s, t, w, offsets[(T.root, e)], denominator)
    return LiftedLP(lp, domains, offsets, numerator, denominator, demands)


@dataclass
class LiftedSolution:
    """Consistent local distributions plus the ratio they achieve."""

    T: TreeDecomposition
    demands: tuple[tuple[int, int], ...]
    dists: dict[tuple[int, int], LocalDistribution]
    alpha: Fraction
    history: list = field(default_factory=list)

    def demand_index(self, u: int, v: int) -> int | None:
        for e, (s, t) in enumerate(self.demands):
            if {s, t} == {u, v}:
                return e
        return None

    def local(self, node: int, demand: int) -> LocalDistribution:
        return self.dists[(node, demand)]

    @cached_property
    def _bag_marginals(self) -> dict[int, LocalDistribution]:
        out = {}
        for i in self.T.nodes:
            margs = [self.dists[(i, e)].marginal(self.T.bags[i]) for e in range(len(self.demands))]
            for m in margs[1:]:
                if isinstance(m.probs[0], float):
                    same = max(abs(a - b) for a, b in zip(m.probs, margs[0].probs)) <= FLOAT_TOL
                else:
                    same = m.probs == margs[0].probs
                if not same:
                    raise InconsistencyDetected(f"demands disagree on the bag of node {i}")
            out[i] = margs[0]
        return out


def bag_marginal(sol: LiftedSolution, i: int) -> LocalDistribution:
    """Distribution of the bag of node ``i`` (all demand blocks must agree)."""
    return sol._bag_marginals[i]


def lpcut(sol: LiftedSolution, u: int, v: int):
    """Separation probability of ``u`` and ``v`` under the local distributions."""
    if u == v:
        return Fraction(0)
    e = sol.demand_index(u, v)
    if e is not None:
        return sol.dists[(sol.T.root, e)].separation(u, v)
    for i in sol.T.nodes:
        if u in sol.T.bags[i] and v in sol.T.bags[i]:
            return bag_marginal(sol, i).separation(u, v)
    raise PairNotCovered(f"({u}, {v}) is neither a demand pair nor inside a bag")


def _dot(coeffs: Sequence[Fraction], x: Sequence) -> Fraction:
    return sum((c * x[j] for j, c in enumerate(coeffs) if c), 0 * x[0])


def _unpack(lifted: LiftedLP, x: Sequence) -> dict[tuple[int, int], LocalDistribution]:
    out = {}
    for key, dom in lifted.domains.items():
        off = lifted.offsets[key]
        out[key] = LocalDistribution(dom, tuple(x[off : off + (1 << len(dom))]))
    return out


def solve_ratio(
    inst: CutInstance, T: TreeDecomposition, *, exact: bool = True, max_iter: int = 200
) -> LiftedSolution:
    """Minimize expected capacity over expected separated demand.

    Dinkelbach: starting from independent fair coins, repeatedly minimize
    ``N - alpha * D`` over the polytope and set ``alpha = N(x) / D(x)`` at
    the minimizer, until the minimum is exactly zero.  With ``exact=False``
    the subproblems go through HiGHS in floating point (tolerance 1e-9).
    """
    lifted = build_lifted_lp(inst, T)
    num, den = lifted.numerator, lifted.denominator
    n = lifted.lp.num_vars
    x = [0] * n
    for key, dom in lifted.domains.items():
        p = Fraction(1, 1 << len(dom))
        off = lifted.offsets[key]
        x[off : off + (1 << len(dom))] = [p] * (1 << len(dom))
    if not exact:
        x = [float(v) for v in x]
    d0 = _dot(den, x)
    if d0 <= 0:
        raise DegenerateDenominator("expected separated demand vanishes at the start point")
    alpha = _dot(num, x) / d0
    history = [alpha]
    solver = ExactSimplex(lifted.lp) if exact else None
    for _ in range(max_iter):
        objective = [a - alpha * b for a, b in zip(num, den)]
        if exact:
            res = solver.minimize(objective)
            value, y = res.value, res.x
            done = value == 0
        else:
            value, y = solve_lp_float(lifted.lp, objective)
            y = [max(float(v), 0.0) for v in y]
            done = value >= -1e-9
        if done:
            break
        d = _dot(den, y)
        if d <= 0:
            raise DegenerateDenominator("separated demand vanished at a Dinkelbach iterate")
        new_alpha = _dot(num, y) / d
        if exact and new_alpha >= alpha:
            raise InvalidParams("Dinkelbach iteration failed to decrease alpha")
        x, alpha = y, new_alpha
        history.append(alpha)
    else:
        raise InvalidParams(f"Dinkelbach did not converge in {max_iter} iterations")
    return LiftedSolution(T, lifted.demands, _unpack(lifted, x), alpha, history)


def solution_from_cuts(
    inst: CutInstance, T: TreeDecomposition, cuts: Mapping[tuple[int, ...], Fraction]
) -> LiftedSolution:
    """Feasible lifted point induced by a distribution over full labellings.

    ``cuts`` maps V-assignments to probabilities; it is symmetrized by mirroring
    and normalized, and every local distribution is the matching marginal.
    ``alpha`` is the ratio the resulting point achieves, not the optimum.
    """
    if not inst.dem_edges:
        raise DegenerateDenominator("instance has no demand edges")
    total = sum(Fraction(p) for p in cuts.values())
    if total <= 0:
        raise InvalidParams("cut distribution has no mass")
    law: dict[tuple[int, ...], Fraction] = {}
    for f, p in cuts.items():
        if len(f) != inst.n:
            raise InvalidParams(f"assignment has {len(f)} labels for n={inst.n}")
        p = Fraction(p) / (2 * total)
        for g in (tuple(f), tuple(1 - b for b in f)):
            law[g] = law.get(g, Fraction(0)) + p
    demands = tuple((s, t) for s, t, _ in inst.dem_edges)
    dists = {}
    for i in T.nodes:
        for e, (s, t) in enumerate(demands):
            dom = tuple(sorted(T.bags[i] | {s, t}))
            probs = [Fraction(0)] * (1 << len(dom))
            for f, p in law.items():
                probs[sum(f[v] << j for j, v in enumerate(dom))] += p
            dists[(i, e)] = LocalDistribution(dom, tuple(probs))
    num = sum((w * p for u, v, w in inst.cap_edges for f, p in law.items() if f[u] != f[v]), Fraction(0))
    den = sum((w * p for u, v, w in inst.dem_edges for f, p in law.items() if f[u] != f[v]), Fraction(0))
    if den == 0:
        raise DegenerateDenominator("cut distribution separates no demand")
    return LiftedSolution(T, demands, dists, num / den)
