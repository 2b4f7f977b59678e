"""Exact rational primal simplex for ``min c.x  s.t.  A x = b,  x >= 0``.

The tableau is stored as sparse rows of ``gmpy2.mpq`` values.  Entering
columns follow Dantzig's rule while pivots make progress and fall back to
Bland's rule during degenerate stalls, which rules out cycling.  A solver
object keeps its tableau after phase 1 so that several objectives over the
same polytope (Dinkelbach iterations) are warm-started from the last basis.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

from .errors import Infeasible, InvalidParams, Unbounded

ZERO = mpq(0)


@dataclass
class LinearProgram:
    """Equality-form LP over non-negative variables; rows are sparse dicts."""

    num_vars: int
    objective: list[Fraction]
    rows: list[dict[int, Fraction]] = field(default_factory=list)
    rhs: list[Fraction] = field(default_factory=list)

    def add_row(self, coeffs: dict[int, Fraction], rhs=0) -> None:
        self.rows.append({j: Fraction(a) for j, a in coeffs.items() if a != 0})
        self.rhs.append(Fraction(rhs))

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def residuals(self, x: Sequence) -> list[Fraction]:
        return [sum((a * x[j] for j, a in row.items()), Fraction(0)) - b for row, b in zip(self.rows, self.rhs)]

    def to_triplets(self) -> dict:
        """Sparse triplet form for cross-checking with external solvers."""
        return {
            "num_vars": self.num_vars,
            "num_rows": self.num_rows,
            "sense": "min",
            "objective": [[j, str(c)] for j, c in enumerate(self.objective) if c != 0],
            "A": [[i, j, str(a)] for i, row in enumerate(self.rows) for j, a in sorted(row.items())],
            "b": [str(b) for b in self.rhs],
            "bounds": "x >= 0",
        }


@dataclass
class LPSolution:
    value: Fraction
    x: list[Fraction]
    pivots: int


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


class ExactSimplex:
    """Simplex solver bound to one polytope ``{x >= 0 : A x = b}``.

    Rows of the form ``x_a - x_b = 0`` are presolved by merging the two
    columns.  Phase 1 runs in the constructor; :meth:`minimize` can then be
    called repeatedly with different objectives.
    """

    def __init__(self, lp: LinearProgram, stall_limit: int = 50):
        self.n = lp.num_vars
        self.stall_limit = stall_limit
        self.pivots = 0
        self._presolve(lp)
        self._phase1()

    # -- presolve ----------------------------------------------------------
    def _presolve(self, lp: LinearProgram) -> None:
        uf = _UnionFind(self.n)
        other_rows = []
        for row, b in zip(lp.rows, lp.rhs):
            if b == 0 and len(row) == 2:
                (a, ca), (c, cc) = row.items()
                if ca == -cc:
                    uf.union(a, c)
                    continue
            other_rows.append((row, b))
        reps = sorted({uf.find(j) for j in range(self.n)})
        col_of = {r: i for i, r in enumerate(reps)}
        self.col_of_var = [col_of[uf.find(j)] for j in range(self.n)]
        self.ncols = len(reps)

        rows, rhs = [], []
        for row, b in other_rows:
            merged: dict[int, mpq] = {}
            for j, a in row.items():
                c = self.col_of_var[j]
                merged[c] = merged.get(c, ZERO) + mpq(a.numerator, a.denominator)
            merged = {c: a for c, a in merged.items() if a != 0}
            b = mpq(b.numerator, b.denominator)
            if not merged:
                if b != 0:
                    raise Infeasible("presolve found 0 = nonzero")
                continue
            if b < 0:
                merged = {c: -a for c, a in merged.items()}
                b = -b
            rows.append(merged)
            rhs.append(b)
        self.rows = rows
        self.rhs = rhs

    # -- core pivoting -----------------------------------------------------
    def _pivot(self, r: int, col: int, obj: dict, zval):
        prow = self.rows[r]
        piv = prow[col]
        if piv != 1:
            inv = 1 / piv
            for j in prow:
                prow[j] *= inv
            self.rhs[r] *= inv
        brhs = self.rhs[r]
        items = list(prow.items())
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row.get(col)
            if f is None:
                continue
            for j, a in items:
                v = row.get(j, ZERO) - f * a
                if v:
                    row[j] = v
                else:
                    del row[j]
            self.rhs[i] -= f * brhs
        f = obj.get(col)
        if f is not None:
            for j, a in items:
                v = obj.get(j, ZERO) - f * a
                if v:
                    obj[j] = v
                else:
                    del obj[j]
            zval += f * brhs
        self.basis[r] = col
        self.pivots += 1
        return zval

    def _run(self, obj: dict, zval, allowed: int):
        """Pivot until every reduced cost over columns ``< allowed`` is >= 0."""
        stall = 0
        while True:
            negatives = [j for j, d in obj.items() if d < 0 and j < allowed]
            if not negatives:
                return zval
            if stall >= self.stall_limit:
                col = min(negatives)  # Bland
            else:
                col = min(negatives, key=lambda j: (obj[j], j))
            best_r, best_ratio = -1, None
            for i, row in enumerate(self.rows):
                a = row.get(col)
                if a is None or a <= 0:
                    continue
                ratio = self.rhs[i] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and self.basis[i] < self.basis[best_r])
                ):
                    best_r, best_ratio = i, ratio
            if best_r < 0:
                raise Unbounded(f"column {col} is an unbounded direction")
            stall = stall + 1 if best_ratio == 0 else 0
            zval = self._pivot(best_r, col, obj, zval)

    # -- phases ------------------------------------------------------------
    def _phase1(self) -> None:
        m, art0 = len(self.rows), self.ncols
        self.basis = [art0 + i for i in range(m)]
        obj: dict[int, mpq] = {}
        zval = ZERO
        for i, row in enumerate(self.rows):
            row[art0 + i] = mpq(1)
            for j, a in row.items():
                if j < art0:
                    obj[j] = obj.get(j, ZERO) - a
            zval += self.rhs[i]
        obj = {j: d for j, d in obj.items() if d}
        zval = self._run(obj, zval, art0)
        if zval != 0:
            raise Infeasible(f"phase 1 optimum {zval} > 0")
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(len(self.rows)):
            if self.basis[i] >= art0:
                col = next((j for j in sorted(self.rows[i]) if j < art0), None)
                if col is None:
                    continue
                self._pivot(i, col, {}, ZERO)
            keep.append(i)
        self.rows = [{j: a for j, a in self.rows[i].items() if j < art0} for i in keep]
        self.rhs = [self.rhs[i] for i in keep]
        self.basis = [self.basis[i] for i in keep]

    def minimize(self, objective: Sequence) -> LPSolution:
        """Optimal basic solution for ``objective`` (one entry per original variable)."""
        if len(objective) != self.n:
            raise InvalidParams(f"objective has {len(objective)} entries, expected {self.n}")
        c: dict[int, mpq] = {}
        for j, cj in enumerate(objective):
            if cj:
                col = self.col_of_var[j]
                cj = Fraction(cj)
                c[col] = c.get(col, ZERO) + mpq(cj.numerator, cj.denominator)
        obj = {j: d for j, d in c.items() if d}
        zval = ZERO
        for i, b in enumerate(self.basis):
            cb = c.get(b)
            if cb:
                for j, a in self.rows[i].items():
                    v = obj.get(j, ZERO) - cb * a
                    if v:
                        obj[j] = v
                    else:
                        obj.pop(j, None)
                zval += cb * self.rhs[i]
        start = self.pivots
        zval = self._run(obj, zval, self.ncols)
        values = [ZERO] * self.ncols
        for i, b in enumerate(self.basis):
            values[b] = self.rhs[i]
        x = [_to_fraction(values[self.col_of_var[j]]) for j in range(self.n)]
        return LPSolution(_to_fraction(zval), x, self.pivots - start)


def solve_lp(lp: LinearProgram, objective: Sequence | None = None) -> LPSolution:
    """Minimize ``objective`` (default ``lp.objective``) exactly over the LP's polytope."""
    solver = ExactSimplex(lp)
    return solver.minimize(lp.objective if objective is None else objective)


def solve_lp_float(lp: LinearProgram, objective: Sequence | None = None, tol: float = 1e-9):
    """Floating-point cross-check through HiGHS; returns ``(value, x)``."""
    import numpy as np
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    c = np.array([float(v) for v in (lp.objective if objective is None else objective)])
    if lp.rows:
        ri, ci, vals = zip(*((i, j, float(a)) for i, row in enumerate(lp.rows) for j, a in row.items()))
        A = coo_matrix((vals, (ri, ci)), shape=(lp.num_rows, lp.num_vars)).tocsr()
        b = np.array([float(v) for v in lp.rhs])
    else:
        A, b = None, None
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status == 2:
        raise Infeasible(res.message)
    if res.status == 3:
        raise Unbounded(res.message)
    if res.status != 0:
        raise InvalidParams(res.message)
    if A is not None and np.max(np.abs(A @ res.x - b), initial=0.0) > tol:
        raise InvalidParams("float solution violates constraints beyond tolerance")
    return float(res.fun), res.x
