from __future__ import annotations

import random
from fractions import Fraction

import pytest

from sparsecut.instance import CutInstance, attach_random_demands, generate_partial_ktree
from sparsecut.lifting import solution_from_cuts
from sparsecut.treedec import TreeDecomposition

ACCEPTANCE_LINES: list[str] = []

FOOTNOTE_BAGS = [
    {"a", "b"},
    {"a", "b", "c"},
    {"a", "c", "d"},
    {"a", "d", "e"},
    {"a", "e", "f"},
    {"a", "f", "g"},
    {"a"},
]


def footnote_bags():
    ids = {c: i for i, c in enumerate("abcdefg")}
    return [{ids[c] for c in bag} for bag in FOOTNOTE_BAGS]


def path_decomposition(bags):
    """Path-shaped decomposition rooted at its first node."""
    return TreeDecomposition(tuple(frozenset(b) for b in bags), tuple((i, i + 1) for i in range(len(bags) - 1)))


def p3_instance() -> CutInstance:
    return CutInstance(3, ((0, 1, 1), (1, 2, 1)), ((0, 2, 1),))


def p3_decomposition() -> TreeDecomposition:
    return path_decomposition([{0, 1}, {1, 2}])


def random_cut_solution(inst, T, seed: int, support: int = 6):
    """Lifted point induced by a random mixture of global labellings."""
    rng = random.Random(seed)
    cuts = {}
    while len(cuts) < support:
        f = tuple(rng.randrange(2) for _ in range(inst.n))
        cuts[f] = Fraction(rng.randrange(1, 10))
    if all(f[s] == f[t] for f in cuts for s, t, _ in inst.dem_edges):
        s, t, _ = inst.dem_edges[0]
        cuts[tuple(int(v == s) for v in range(inst.n))] = Fraction(1)
    return solution_from_cuts(inst, T, cuts)


def small_instance(n: int, k: int, demands: int, seed: int, keep_prob: float = 0.8):
    inst, T = generate_partial_ktree(n, k, keep_prob, seed)
    return attach_random_demands(inst, demands, seed), T


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
