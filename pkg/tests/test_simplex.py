from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsecut.errors import Infeasible, Unbounded
from sparsecut.simplex import ExactSimplex, LinearProgram, solve_lp, solve_lp_float


def lp_from(rows, rhs, c):
    lp = LinearProgram(len(c), [Fraction(x) for x in c])
    for row, b in zip(rows, rhs):
        lp.add_row({j: a for j, a in enumerate(row) if a}, b)
    return lp


def test_small_lp():
    # min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
    lp = lp_from([[1, 2, 1, 0], [3, 1, 0, 1]], [4, 6], [-1, -1, 0, 0])
    sol = solve_lp(lp)
    assert sol.value == Fraction(-14, 5)
    assert sol.x[:2] == [Fraction(8, 5), Fraction(6, 5)]
    assert all(r == 0 for r in lp.residuals(sol.x))


def test_infeasible_and_unbounded():
    with pytest.raises(Infeasible):
        solve_lp(lp_from([[1, 1]], [-1], [0, 0]))
    with pytest.raises(Unbounded):
        solve_lp(lp_from([[1, -1]], [0], [-1, 0]))


def test_equality_rows_are_merged_and_warm_start_is_exact():
    lp = lp_from([[1, 1, 1], [1, -1, 0]], [1, 0], [0, 0, 0])
    solver = ExactSimplex(lp)
    assert solver.ncols == 2
    a = solver.minimize([-1, 0, 0])
    b = solver.minimize([0, 0, -1])
    assert a.value == Fraction(-1, 2) and a.x[0] == a.x[1]
    assert b.value == -1


def test_triplets():
    lp = lp_from([[1, 0, 2]], [3], [1, 0, 0])
    data = lp.to_triplets()
    assert data["A"] == [[0, 0, "1"], [0, 2, "2"]]
    assert data["b"] == ["3"] and data["objective"] == [[0, "1"]]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(2, 6), st.data())
def test_matches_highs(m, n, data):
    ints = st.integers(-3, 3)
    A = [[data.draw(ints) for _ in range(n)] for _ in range(m)]
    # a feasible point keeps phase 1 honest; a box row keeps the problem bounded
    x0 = [data.draw(st.integers(0, 2)) for _ in range(n)]
    b = [sum(a * x for a, x in zip(row, x0)) for row in A]
    A.append([1] * n + [1])
    for row in A[:-1]:
        row.append(0)
    b.append(sum(x0) + 1)
    c = [data.draw(ints) for _ in range(n)] + [0]
    lp = lp_from(A, b, c)
    exact = solve_lp(lp)
    value, _ = solve_lp_float(lp)
    assert abs(float(exact.value) - value) < 1e-7
    assert all(r == 0 for r in lp.residuals(exact.x))
    assert min(exact.x) >= 0
