from __future__ import annotations

from fractions import Fraction

import networkx as nx
import pytest

from sparsecut.combdiam import DecPath, simplify_exact
from sparsecut.errors import EndpointNotInBag
from sparsecut.instance import CutInstance
from sparsecut.lifting import lpcut, solution_from_cuts, solve_ratio
from sparsecut.markov import build_H, check_lemmas, lp_flow, max_flow, potential_profile, walk_marginals
from sparsecut.rounding import pair_path
from sparsecut.treedec import TreeDecomposition, balance

from conftest import p3_decomposition, p3_instance, random_cut_solution, small_instance

Q = Fraction(1, 4)


def p3_h(cuts):
    inst, T = p3_instance(), p3_decomposition()
    sol = solution_from_cuts(inst, T, cuts)
    return build_H(DecPath.from_tree(T, 0, 1), sol, 0, 2), sol


def test_one_layer_graph_is_the_pair_law():
    inst = CutInstance(2, ((0, 1, 1),), ((0, 1, 1),))
    T = TreeDecomposition((frozenset({0, 1}),))
    sol = solution_from_cuts(inst, T, {(0, 0): 1, (0, 1): 3})
    H = build_H(DecPath.from_tree(T, 0, 0), sol, 0, 1)
    assert H.ell == 1 and H.layer_sizes() == [2, 2]
    assert H.weights(0) == {(0, 0): Fraction(1, 8), (1, 1): Fraction(1, 8), (0, 1): Fraction(3, 8), (1, 0): Fraction(3, 8)}


def test_p3_worked_instance():
    # cuts {0} and {2}, mirrored: the LP always separates 0 and 2, the walk forgets
    H, sol = p3_h({(0, 1, 1): 1, (0, 0, 1): 1})
    assert H.sets == ((0,), (1,), (2,))
    assert H.weights(0) == {(0, 0): Q, (0, 1): Q, (1, 0): Q, (1, 1): Q}
    assert H.weights(1) == {(1, 1): Q, (0, 0): Q, (0, 1): Q, (1, 0): Q}
    prof = potential_profile(H)
    assert prof.phi == [Q, 0, 0]
    assert prof.A[(0, 0)] == Fraction(1, 2) and prof.A[(0, 1)] == Fraction(-1, 2)
    flow = lp_flow(H)
    assert flow.value == Fraction(1, 2) == lpcut(sol, 0, 2) / 2
    assert flow.conservation_residual == 0 and flow.capacity_violations == 0
    assert max_flow(H, H.s0, H.t1)[0] == Fraction(1, 2)
    rep = check_lemmas(H)
    assert rep.p_s0_t1 == Q
    assert rep.variance_slack == Q
    assert rep.A_t1 == 0 and rep.point_i_bound == Q
    assert rep.ok


def test_independent_layers():
    cuts = {tuple((m >> j) & 1 for j in range(3)): 1 for m in range(8)}
    H, _ = p3_h(cuts)
    prof = potential_profile(H)
    assert prof.phi[1:] == [0, 0]
    assert lp_flow(H).value == Q
    rep = check_lemmas(H)
    assert rep.variance_slack == 2 * Q - Q
    assert rep.ok


def test_two_by_two_bottleneck():
    inst = CutInstance(2, ((0, 1, 1),), ((0, 1, 1),))
    T = TreeDecomposition((frozenset({0, 1}),))
    sol = solution_from_cuts(inst, T, {(0, 0): 1, (0, 1): 1})
    H = build_H(DecPath.from_tree(T, 0, 0), sol, 0, 1)
    assert max_flow(H, H.s0, H.t1)[0] == Q


def test_degenerate_single_layer():
    H, _ = p3_h({(0, 1, 1): 1})
    H0 = build_H(DecPath.from_tree(p3_decomposition(), 0, 0), H.sol, 0, 0)
    assert H0.ell == 0
    assert potential_profile(H0).phi == [Q]


def test_zero_flow_when_labels_always_agree():
    # f(0) = f(1) under every cut of the mixture, so s_0 never reaches t_1
    H, sol = p3_h({(0, 0, 1): 1})
    H01 = build_H(DecPath.from_tree(p3_decomposition(), 0, 0), sol, 0, 1)
    assert max_flow(H01, H01.s0, H01.t1)[0] == 0
    assert check_lemmas(H01).ok


def test_endpoint_checks():
    H, sol = p3_h({(0, 1, 1): 1})
    with pytest.raises(EndpointNotInBag):
        build_H(DecPath.from_tree(p3_decomposition(), 0, 1), sol, 2, 0)


@pytest.mark.parametrize("seed", range(8))
def test_lemmas_on_random_points(seed):
    inst, T = small_instance(9, 2, 4, seed)
    sol = random_cut_solution(inst, T, seed, support=5)
    for s, t, _ in inst.dem_edges:
        path = simplify_exact(pair_path(T, s, t)).final
        H = build_H(path, sol, s, t)
        rep = check_lemmas(H)
        assert rep.violations() == []
        # per-layer weights sum to one and reproduce the walk marginals
        for i in range(H.ell):
            assert sum(H.weights(i).values()) == 1
        assert walk_marginals(H)[-1] == list(H.layers.probs[-1])
        g = nx.DiGraph()
        for u, v, w in H.edges():
            g.add_edge(u, v, capacity=w)
        if H.s0 in g and H.t1 in g:
            assert nx.maximum_flow_value(g, H.s0, H.t1) == rep.mincut


def test_lemmas_on_lp_optimum():
    inst, T = small_instance(8, 2, 3, 5)
    T = balance(T)
    sol = solve_ratio(inst, T)
    for s, t, _ in inst.dem_edges:
        rep = check_lemmas(build_H(simplify_exact(pair_path(T, s, t)).final, sol, s, t))
        assert rep.ok
