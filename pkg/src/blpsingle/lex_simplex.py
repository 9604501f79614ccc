"""Exact bounded-variable simplex with lexicographic objectives.

All arithmetic is exact.  The kernel runs on ``gmpy2.mpq`` when available
(see :func:`blpsingle.exact_arith.backend`) and on ``fractions.Fraction``
otherwise; results are always returned as ``Fraction``.

Pivoting follows Bland's smallest-index rule.  With several objectives the
reduced cost of a column is the vector of its per-objective reduced costs,
compared lexicographically, so the returned basis is lex-dual feasible for
the original constraint system: its optimality does not depend on the
right-hand side, which is what :func:`stability_interval` relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .exact_arith import kernel_scalar, to_fraction
from .model_io import LexLp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class InfeasibleBasis(ValueError):
    """The supplied basis is not primal feasible at the current data."""


@dataclass(frozen=True)
class BasicSolution:
    basis: tuple
    values: tuple
    objective_values: tuple
    rows: tuple = ()
    at_upper: frozenset = field(default_factory=frozenset)
    pivots: int = 0


@dataclass(frozen=True)
class LpResult:
    status: str
    solution: Optional[BasicSolution] = None
    level: Optional[int] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def independent_rows(A: Sequence[Sequence], b: Sequence, Q=Fraction):
    """Indices of a maximal independent subset of the rows of [A | b].

    Returns ``(rows, consistent)``; ``consistent`` is False when some row of A
    is a combination of earlier rows but its right-hand side is not.
    """
    pivots: list[tuple[int, list]] = []  # (pivot column, reduced row incl. rhs)
    keep = []
    for i, (row, rhs) in enumerate(zip(A, b)):
        vec = [Q(v) for v in row] + [Q(rhs)]
        for col, prow in pivots:
            f = vec[col]
            if f:
                for k in range(len(vec)):
                    if prow[k]:
                        vec[k] -= f * prow[k]
        lead = next((k for k in range(len(vec) - 1) if vec[k]), None)
        if lead is None:
            if vec[-1]:
                return keep, False
            continue
        inv = 1 / vec[lead]
        vec = [v * inv for v in vec]
        for _, prow in pivots:
            f = prow[lead]
            if f:
                for k in range(len(prow)):
                    if vec[k]:
                        prow[k] -= f * vec[k]
        pivots.append((lead, vec))
        keep.append(i)
    return keep, True


def _lexsign(column: Sequence) -> int:
    for v in column:
        if v > 0:
            return 1
        if v < 0:
            return -1
    return 0


class _Simplex:
    """Dense tableau T = B^-1 A over the kept rows, with explicit x."""

    def __init__(self, lp: LexLp, rows: Sequence[int], Q):
        self.Q = Q
        self.n = lp.nvars
        self.rows = list(rows)
        self.m = len(self.rows)
        zero = Q(0)
        self.lo = [None if v is None else Q(v) for v in lp.lo]
        self.hi = [None if v is None else Q(v) for v in lp.hi]
        for j in range(self.n):
            if self.lo[j] is not None and self.hi[j] is not None and self.lo[j] > self.hi[j]:
                raise _Infeasible
        x = []
        for j in range(self.n):
            if self.lo[j] is not None:
                x.append(self.lo[j])
            elif self.hi[j] is not None:
                x.append(self.hi[j])
            else:
                x.append(zero)
        A = [[Q(v) for v in lp.A[i]] for i in self.rows]
        b = [Q(lp.b[i]) for i in self.rows]
        # artificial columns n..n+m-1 carry the initial residuals
        T = []
        basis = []
        for i in range(self.m):
            resid = b[i] - sum((A[i][j] * x[j] for j in range(self.n) if A[i][j] and x[j]), zero)
            sign = 1 if resid >= 0 else -1
            row = [v if sign > 0 else -v for v in A[i]] + [zero] * self.m
            row[self.n + i] = Q(1)
            T.append(row)
            basis.append(self.n + i)
            x.append(abs(resid))
        self.T = T
        self.basis = basis
        self.x = x
        self.lo += [zero] * self.m
        self.hi += [None] * self.m
        self.ncols = self.n + self.m
        self.pivots = 0

    def fixed(self, j: int) -> bool:
        return self.lo[j] is not None and self.lo[j] == self.hi[j]

    def reduced_costs(self, costs: list[list]) -> list[list]:
        D = []
        for c in costs:
            d = list(c)
            for i, bj in enumerate(self.basis):
                cb = c[bj]
                if cb:
                    row = self.T[i]
                    for k in range(self.ncols):
                        if row[k]:
                            d[k] -= cb * row[k]
            D.append(d)
        return D

    def pivot(self, r: int, j: int, D: list[list]) -> None:
        T = self.T
        prow = T[r]
        inv = 1 / prow[j]
        nz = [k for k in range(self.ncols) if prow[k]]
        for k in nz:
            prow[k] *= inv
        for i in range(self.m):
            if i == r:
                continue
            row = T[i]
            f = row[j]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
        for d in D:
            f = d[j]
            if f:
                for k in nz:
                    d[k] -= f * prow[k]
        self.basis[r] = j
        self.pivots += 1

    def run(self, D: list[list], allowed: int) -> Optional[int]:
        """Primal simplex on lex reduced costs D. Returns the unbounded level or None."""
        T, x, lo, hi = self.T, self.x, self.lo, self.hi
        while True:
            basic = set(self.basis)
            enter = None
            direction = 0
            for j in range(allowed):
                if j in basic or self.fixed(j):
                    continue
                sgn = _lexsign([d[j] for d in D])
                if sgn < 0 and (hi[j] is None or x[j] < hi[j]):
                    enter, direction = j, 1
                    break
                if sgn > 0 and (lo[j] is None or x[j] > lo[j]):
                    enter, direction = j, -1
                    break
            if enter is None:
                return None
            j = enter
            best = None  # (step, variable index, row or -1)
            if direction > 0 and hi[j] is not None:
                best = (hi[j] - x[j], j, -1)
            elif direction < 0 and lo[j] is not None:
                best = (x[j] - lo[j], j, -1)
            for i in range(self.m):
                a = T[i][j]
                if not a:
                    continue
                bi = self.basis[i]
                rate = -a if direction > 0 else a  # d x_bi / d step
                if rate < 0:
                    if lo[bi] is None:
                        continue
                    step = (x[bi] - lo[bi]) / -rate
                else:
                    if hi[bi] is None:
                        continue
                    step = (hi[bi] - x[bi]) / rate
                cand = (step, bi, i)
                if best is None or cand[0] < best[0] or (cand[0] == best[0] and cand[1] < best[1]):
                    best = cand
            if best is None:
                return next(k for k, d in enumerate(D) if d[j])
            step, leaving, r = best
            if step:
                x[j] += step if direction > 0 else -step
                for i in range(self.m):
                    a = T[i][j]
                    if a:
                        bi = self.basis[i]
                        x[bi] -= a * step if direction > 0 else -a * step
            if r < 0:
                x[j] = hi[j] if direction > 0 else lo[j]
                continue
            a = T[r][j]
            rate = -a if direction > 0 else a
            x[leaving] = lo[leaving] if rate < 0 else hi[leaving]
            self.pivot(r, j, D)

    def drive_out_artificials(self) -> None:
        for r in range(self.m):
            if self.basis[r] < self.n:
                continue
            row = self.T[r]
            basic = set(self.basis)
            cands = [j for j in range(self.n) if row[j] and j not in basic]
            if not cands:  # pragma: no cover - rows were made independent
                raise RuntimeError("artificial column cannot leave the basis")
            free = [j for j in cands if not self.fixed(j)]
            self.pivot(r, (free or cands)[0], [])
        # drop artificial columns
        for row in self.T:
            del row[self.n:]
        del self.x[self.n:]
        del self.lo[self.n:]
        del self.hi[self.n:]
        self.ncols = self.n


class _Infeasible(Exception):
    pass


def _solve(lp: LexLp) -> LpResult:
    Q = kernel_scalar()
    rows, consistent = independent_rows(lp.A, lp.b, Q)
    if not consistent:
        return LpResult(INFEASIBLE)
    try:
        S = _Simplex(lp, rows, Q)
    except _Infeasible:
        return LpResult(INFEASIBLE)
    zero, one = Q(0), Q(1)
    phase1 = [[zero] * S.n + [one] * S.m]
    D = S.reduced_costs(phase1)
    S.run(D, S.ncols)
    if any(S.x[S.n + i] for i in range(S.m)):
        return LpResult(INFEASIBLE)
    S.drive_out_artificials()
    costs = [[Q(v) for v in c] for c in lp.objectives]
    D = S.reduced_costs(costs)
    level = S.run(D, S.n)
    if level is not None:
        return LpResult(UNBOUNDED, level=level)
    values = tuple(to_fraction(v) for v in S.x)
    objective_values = tuple(
        sum((c * v for c, v in zip(obj, values) if c and v), Fraction(0)) for obj in lp.objectives
    )
    at_upper = frozenset(
        j
        for j in range(S.n)
        if j not in S.basis and lp.hi[j] is not None and values[j] == lp.hi[j] and lp.lo[j] != lp.hi[j]
    )
    sol = BasicSolution(
        basis=tuple(S.basis),
        values=values,
        objective_values=objective_values,
        rows=tuple(rows),
        at_upper=at_upper,
        pivots=S.pivots,
    )
    return LpResult(OPTIMAL, sol)


def solve_lp(lp: LexLp) -> LpResult:
    """Single-objective solve; returns a basic optimal solution when one exists."""
    if len(lp.objectives) != 1:
        raise ValueError(f"solve_lp expects one objective, got {len(lp.objectives)}")
    return _solve(lp)


def solve_lex(lp: LexLp) -> LpResult:
    """Lexicographic minimum over ``lp.objectives`` in order."""
    return _solve(lp)


def solve_lex_sequential(lp: LexLp) -> LpResult:
    """Lexicographic minimum by value pinning.

    Optimizes objective k alone, appends the row c_k x = v_k, moves on.
    Slower than :func:`solve_lex`; used as an independent cross-check.
    """
    A = list(lp.A)
    b = list(lp.b)
    result = None
    for k, c in enumerate(lp.objectives):
        stage = LexLp(lp.nvars, A, b, lp.lo, lp.hi, (c,), lp.names)
        result = _solve(stage)
        if result.status == UNBOUNDED:
            return LpResult(UNBOUNDED, level=k)
        if result.status != OPTIMAL:
            return result
        A.append(c)
        b.append(result.solution.objective_values[0])
    sol = result.solution
    objective_values = tuple(
        sum((c * v for c, v in zip(obj, sol.values) if c and v), Fraction(0)) for obj in lp.objectives
    )
    return LpResult(
        OPTIMAL,
        BasicSolution(sol.basis, sol.values, objective_values, sol.rows, sol.at_upper, sol.pivots),
    )


# -- basis algebra ------------------------------------------------------------


def solve_square(M: Sequence[Sequence], rhs_columns: Sequence[Sequence], Q=Fraction):
    """Solve M Y = R exactly for each right-hand side column of R."""
    m = len(M)
    k = len(rhs_columns)
    aug = [[Q(v) for v in M[i]] + [Q(rhs_columns[c][i]) for c in range(k)] for i in range(m)]
    for col in range(m):
        piv = next((r for r in range(col, m) if aug[r][col]), None)
        if piv is None:
            raise ValueError("singular basis matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(m):
            if r != col and aug[r][col]:
                f = aug[r][col]
                prow = aug[col]
                aug[r] = [a - f * p for a, p in zip(aug[r], prow)]
    return [[aug[i][m + c] for i in range(m)] for c in range(k)]


@dataclass
class BasisFactor:
    """A fixed basis of ``lp`` that can be re-evaluated when the value of a
    fixed (parameter) column changes."""

    lp: LexLp
    basis: tuple
    rows: tuple
    at_upper: frozenset
    param_column: int
    base: list = field(init=False)
    slope: list = field(init=False)

    def __post_init__(self):
        Q = kernel_scalar()
        lp = self.lp
        bset = set(self.basis)
        B = [[lp.A[i][j] for j in self.basis] for i in self.rows]
        # rhs = b - sum_{nonbasic, non-param} A_j x_j ; parameter handled separately
        rhs = []
        for i in self.rows:
            total = Q(lp.b[i])
            for j in range(lp.nvars):
                if j in bset or j == self.param_column:
                    continue
                a = lp.A[i][j]
                if a:
                    total -= Q(a) * Q(self._nonbasic_value(j))
            rhs.append(total)
        param_col = [lp.A[i][self.param_column] for i in self.rows]
        base, pcol = solve_square(B, [rhs, param_col], Q)
        self.base = base
        self.slope = [-v for v in pcol]

    def _nonbasic_value(self, j: int):
        lp = self.lp
        if j in self.at_upper:
            return lp.hi[j]
        if lp.lo[j] is not None:
            return lp.lo[j]
        if lp.hi[j] is not None:
            return lp.hi[j]
        return 0

    def basic_values(self, param) -> list:
        return [b + s * param for b, s in zip(self.base, self.slope)]

    def values(self, param) -> list[Fraction]:
        lp = self.lp
        out = []
        for j in range(lp.nvars):
            out.append(Fraction(0) if j == self.param_column else to_fraction(self._nonbasic_value(j)))
        out[self.param_column] = Fraction(param)
        for j, v in zip(self.basis, self.basic_values(param)):
            out[j] = to_fraction(v)
        return out

    def feasible_at(self, param) -> bool:
        lp = self.lp
        for j, v in zip(self.basis, self.basic_values(param)):
            if lp.lo[j] is not None and v < lp.lo[j]:
                return False
            if lp.hi[j] is not None and v > lp.hi[j]:
                return False
        return True

    def interval(self, param) -> tuple:
        """Maximal closed parameter interval on which the basis stays feasible."""
        lp = self.lp
        lo_t, hi_t = None, None
        param = Fraction(param)
        for j, b, s in zip(self.basis, self.base, self.slope):
            b, s = to_fraction(b), to_fraction(s)
            v = b + s * param
            if (lp.lo[j] is not None and v < lp.lo[j]) or (lp.hi[j] is not None and v > lp.hi[j]):
                raise InfeasibleBasis(f"basic column {j} is out of bounds at {param}")
            if not s:
                continue
            # lo_j <= b + s t <= hi_j
            for bound, is_lower in ((lp.lo[j], True), (lp.hi[j], False)):
                if bound is None:
                    continue
                t = (bound - b) / s
                if (s > 0) == is_lower:
                    lo_t = t if lo_t is None else max(lo_t, t)
                else:
                    hi_t = t if hi_t is None else min(hi_t, t)
        return lo_t, hi_t


def stability_interval(lp: LexLp, solution: BasicSolution, param_column: int, param_bounds=None):
    """Closed interval of values of the fixed column ``param_column`` for which
    the basis of ``solution`` stays primal feasible (hence lex optimal).

    Endpoints are ``None`` when unbounded; ``param_bounds`` clips the result.
    """
    if lp.lo[param_column] is None or lp.lo[param_column] != lp.hi[param_column]:
        raise ValueError("the parameter column must be fixed (lo == hi)")
    if param_column in solution.basis:
        raise ValueError("the parameter column is basic; no affine dependence")
    factor = BasisFactor(lp, solution.basis, solution.rows, solution.at_upper, param_column)
    lo_t, hi_t = factor.interval(lp.lo[param_column])
    if param_bounds is not None:
        plo, phi = param_bounds
        if plo is not None:
            lo_t = plo if lo_t is None else max(lo_t, Fraction(plo))
        if phi is not None:
            hi_t = phi if hi_t is None else min(hi_t, Fraction(phi))
    return lo_t, hi_t
