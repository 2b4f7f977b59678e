from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsecut.combdiam import combinatorial_diameter
from sparsecut.errors import InvalidParams
from sparsecut.instance import generate_partial_ktree
from sparsecut.shallow import (
    bridges,
    certified_diameter_bound,
    diameter_bound,
    highways,
    layer_annotation,
    layer_spacing,
    sandwich_violations,
    super_highways,
    sync_annotation,
)
from sparsecut.treedec import TreeDecomposition, balance, validate


def chain(depth: int) -> TreeDecomposition:
    """Path of ``depth + 1`` nodes; node i holds {i, i+1}."""
    return TreeDecomposition.from_parents([{i, i + 1} for i in range(depth + 1)], [-1, *range(depth)])


def test_sync_ancestors_on_a_chain():
    ann = sync_annotation(chain(6), 3)
    assert ann.sync_nodes == frozenset({0, 3, 6})
    assert ann.sigma == (-1, 0, 0, 0, 3, 3, 3)


def test_bridge_bags_on_a_chain():
    B = bridges(chain(6), 3)
    assert B.bags[0] == frozenset({0, 1})
    assert B.bags[2] == frozenset({0, 1, 2, 3})
    assert B.bags[4] == frozenset({3, 4, 5})


def test_highway_bags_on_a_chain():
    H = highways(chain(6), 3)
    assert H.bags[5] == frozenset({0, 1, 3, 4, 5, 6})


def test_lambda_must_be_positive():
    with pytest.raises(InvalidParams):
        bridges(chain(3), 0)
    with pytest.raises(InvalidParams):
        layer_spacing(2, 5, 0)


def test_spacing_is_a_divisibility_chain():
    for width in range(1, 6):
        for depth in range(1, 30):
            for q in range(1, 4):
                sp = layer_spacing(width, depth, q)
                assert len(sp) == q and sp[0] >= 1
                assert all(b % a == 0 for a, b in zip(sp, sp[1:]))


def test_layer_of_root_is_top():
    T = chain(8)
    ann = layer_annotation(T, 2, (2, 4))
    assert ann.pi == (1, -1, 0, -1, 1, -1, 0, -1, 1)


def test_bounds():
    assert diameter_bound("bridges", depth=7, lam=2) == 8
    assert diameter_bound("highways") == 3
    assert diameter_bound("superhighways", q=3) == 7


@settings(max_examples=25, deadline=None)
@given(st.integers(5, 35), st.integers(1, 3), st.integers(0, 10**6), st.integers(1, 4))
def test_constructions_are_valid_and_sandwiched(n, k, seed, param):
    inst, T = generate_partial_ktree(max(n, k + 1), k, 0.7, seed)
    T = balance(T)
    outs = [bridges(T, param), highways(T, param), super_highways(T, min(param, 3))]
    for out in outs:
        assert validate(inst, out).ok
        assert sandwich_violations(T, out) == []
        assert out.bags[out.root] == T.bags[T.root]


@settings(max_examples=15, deadline=None)
@given(st.integers(5, 30), st.integers(1, 3), st.integers(0, 10**6))
def test_lemma_traces_certify_measured_diameter(n, k, seed):
    inst, T = generate_partial_ktree(max(n, k + 1), k, 0.7, seed)
    T = balance(T)
    H = highways(T, 2)
    bound, traces = certified_diameter_bound(H, "highways", lam=2, sample=None)
    assert bound == 3
    assert combinatorial_diameter(H)[0] <= 3
    q = 2
    sp = layer_spacing(T.width, T.depth, q)
    S = super_highways(T, q, sp)
    bound, _ = certified_diameter_bound(S, "superhighways", q=q, spacing=sp, sample=None)
    assert combinatorial_diameter(S)[0] <= bound == 5
