"""Standard form of the lower level and evaluation of the value function psi."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional

from ..exact_arith import kernel_scalar
from ..lex_simplex import BasisFactor, INFEASIBLE, OPTIMAL, solve_lex, solve_lp
from ..model_io import BlpSingle, LexLp


class LowerInfeasible(ValueError):
    """x2 lies outside [l, u]: the lower level has no feasible point."""


@dataclass(frozen=True)
class StandardBlp:
    """Lower level as  A11 z1 + A12 x2 = b1,  z1 >= 0,  plus rows in x2 alone.

    ``z1`` is (x1, upper-bound slacks w with x1 + w = 1, one surplus per
    remaining inequality).  ``x2_rows`` holds (coefficient, rhs, is_equality)
    triples meaning coefficient * x2 >= rhs (or = rhs); the unit box of x2 is
    among them.
    """

    source: BlpSingle
    nz: int
    A11: tuple
    A12: tuple
    b1: tuple
    x2_rows: tuple
    c11: tuple
    c21: tuple
    c22: Fraction
    row_origin: tuple  # source row index per kept row; "box j" for x1_j + w_j = 1
    surplus_of: dict  # source row -> surplus column
    infeasible: bool = False

    @property
    def n1(self) -> int:
        return self.source.n

    @property
    def m(self) -> int:
        return len(self.b1)

    def x1_from_z1(self, z1) -> tuple:
        return tuple(z1[: self.n1])

    def x2_interval(self):
        """Bounds on x2 implied by the pure-x2 rows alone, or None if empty."""
        lo, hi = Fraction(0), Fraction(1)
        for a, r, eq in self.x2_rows:
            if a == 0:
                if (eq and r != 0) or (not eq and r > 0):
                    return None
                continue
            v = r / a
            if eq:
                lo, hi = max(lo, v), min(hi, v)
            elif a > 0:
                lo = max(lo, v)
            else:
                hi = min(hi, v)
        if lo > hi:
            return None
        return lo, hi


def _reduce_rows(rows):
    """Split equality rows (a11, a12, b) into a set with independent a11 parts
    plus derived pure-x2 equalities.  Returns (kept indices, x2 equalities, ok)."""
    pivots = []  # (pivot col, normalized reduced vector incl. a12 and b)
    kept = []
    x2_eqs = []
    for idx, (a11, a12, b) in enumerate(rows):
        vec = list(a11) + [a12, b]
        width = len(a11)
        for col, prow in pivots:
            f = vec[col]
            if f:
                for k in range(len(vec)):
                    if prow[k]:
                        vec[k] -= f * prow[k]
        lead = next((k for k in range(width) if vec[k]), None)
        if lead is None:
            a, r = vec[width], vec[width + 1]
            if a == 0 and r != 0:
                return kept, x2_eqs, False
            if a != 0:
                x2_eqs.append((a, r))
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
        kept.append(idx)
    return kept, x2_eqs, True


def to_standard_form(b: BlpSingle) -> StandardBlp:
    n = b.n
    zero, one = Fraction(0), Fraction(1)
    x2_rows = [(one, zero, False), (-one, -one, False)]
    # classify rows: pure x2, equality pairs, plain inequalities
    seen = {}
    ineq = []  # source indices
    eq = []
    for k in range(b.m):
        a11, a12, rhs = b.A11[k], b.A12[k], b.b1[k]
        if not any(a11):
            x2_rows.append((a12, rhs, False))
            continue
        key = (a11, a12, rhs)
        if key in seen:
            continue
        neg = (tuple(-v for v in a11), -a12, -rhs)
        if neg in seen:
            partner = seen.pop(neg)
            ineq.remove(partner)
            eq.append(partner)
            continue
        seen[key] = k
        ineq.append(k)
    ineq.sort()
    eq.sort()
    nz = 2 * n + len(ineq)
    surplus_of = {k: 2 * n + i for i, k in enumerate(ineq)}
    rows = []
    origin = []
    for j in range(n):
        r = [zero] * nz
        r[j] = r[n + j] = one
        rows.append((tuple(r), zero, one))
        origin.append(f"box {j}")
    for k in sorted(ineq + eq):
        r = [zero] * nz
        r[:n] = b.A11[k]
        if k in surplus_of:
            r[surplus_of[k]] = -one
        rows.append((tuple(r), b.A12[k], b.b1[k]))
        origin.append(k)
    kept, x2_eqs, ok = _reduce_rows(rows)
    for a, r in x2_eqs:
        x2_rows.append((a, r, True))
    c11 = tuple(b.c11) + (zero,) * (nz - n)
    c21 = tuple(b.c21) + (zero,) * (nz - n)
    return StandardBlp(
        source=b,
        nz=nz,
        A11=tuple(rows[i][0] for i in kept),
        A12=tuple(rows[i][1] for i in kept),
        b1=tuple(rows[i][2] for i in kept),
        x2_rows=tuple(x2_rows),
        c11=c11,
        c21=c21,
        c22=b.c22,
        row_origin=tuple(origin[i] for i in kept),
        surplus_of=surplus_of,
        infeasible=not ok,
    )


def lifted_lp(std: StandardBlp, objectives, x2_bounds=None) -> LexLp:
    """LexLp over (z1, x2); x2 is the last column with the given bounds."""
    nz = std.nz
    A = [tuple(row) + (a12,) for row, a12 in zip(std.A11, std.A12)]
    lo = [Fraction(0)] * nz + [None]
    hi = [None] * nz + [None]
    if x2_bounds is not None:
        lo[nz], hi[nz] = x2_bounds
    objs = [tuple(c) + (Fraction(0),) if len(c) == nz else tuple(c) for c in objectives]
    return LexLp(nz + 1, A, std.b1, lo, hi, objs)


@dataclass(frozen=True)
class Bounds:
    lo: Fraction
    hi: Fraction


def compute_bounds(std: StandardBlp) -> Optional[Bounds]:
    """[l, u] = projection of the lower feasible set onto x2, or None if empty."""
    if std.infeasible:
        return None
    box = std.x2_interval()
    if box is None:
        return None
    obj = [Fraction(0)] * std.nz + [Fraction(1)]
    lp = lifted_lp(std, [obj], box)
    low = solve_lp(lp)
    if low.status == INFEASIBLE:
        return None
    high = solve_lp(lp.with_objectives([[-v for v in obj]]))
    return Bounds(low.solution.values[-1], high.solution.values[-1])


class PsiEvaluator:
    """psi(x2) = c21.z1 + c22 x2 at the optimistic lex-optimal lower solution.

    Every solved basis is kept; a later query first tries each stored basis
    and accepts the first one that is primal feasible at the new x2.  Those
    bases are lex dual feasible independently of x2, so feasibility alone
    certifies optimality.
    """

    def __init__(self, std: StandardBlp, max_cache: int = 64):
        self.std = std
        self.bounds = compute_bounds(std)
        self.param = std.nz
        self._template = lifted_lp(std, [std.c11, std.c21], (Fraction(0), Fraction(0)))
        self.cache: list[BasisFactor] = []
        self.max_cache = max_cache
        self.solves = 0
        self.hits = 0

    def _check(self, x2: Fraction) -> None:
        if self.bounds is None or not self.bounds.lo <= x2 <= self.bounds.hi:
            raise LowerInfeasible(f"x2 = {x2} lies outside the lower-feasible interval")

    def factor(self, x2) -> BasisFactor:
        x2 = Fraction(x2)
        self._check(x2)
        for fac in self.cache:
            if fac.feasible_at(x2):
                self.hits += 1
                return fac
        lp = self._template.with_fixed(self.param, x2)
        res = solve_lex(lp)
        self.solves += 1
        if res.status != OPTIMAL:  # pragma: no cover - bounded by construction
            raise LowerInfeasible(f"lower level {res.status} at x2 = {x2}")
        sol = res.solution
        if self.param in sol.basis:  # pragma: no cover - fixed columns never enter
            raise RuntimeError("parameter column entered the basis")
        fac = BasisFactor(self._template.with_fixed(self.param, x2), sol.basis, sol.rows, sol.at_upper, self.param)
        self.cache.insert(0, fac)
        del self.cache[self.max_cache :]
        return fac

    def z1(self, x2) -> tuple:
        fac = self.factor(x2)
        return tuple(fac.values(Fraction(x2))[: self.std.nz])

    def __call__(self, x2) -> Fraction:
        x2 = Fraction(x2)
        fac = self.factor(x2)
        return self.value_from(fac, x2)

    def value_from(self, fac: BasisFactor, x2: Fraction) -> Fraction:
        z1 = fac.values(x2)
        total = self.std.c22 * x2
        for c, v in zip(self.std.c21, z1):
            if c and v:
                total += c * v
        return total

    def slope_from(self, fac: BasisFactor) -> Fraction:
        """d psi / d x2 on the stability interval of ``fac``."""
        Q = kernel_scalar()
        slope = Q(self.std.c22)
        for j, s in zip(fac.basis, fac.slope):
            c = self.std.c21[j] if j < self.std.nz else 0
            if c and s:
                slope += Q(c) * s
        return Fraction(int(slope.numerator), int(slope.denominator))


def eval_psi(std: StandardBlp, x2, evaluator: Optional[PsiEvaluator] = None) -> Fraction:
    ev = evaluator or PsiEvaluator(std)
    return ev(x2)


def integer_row_norm(values) -> int:
    """l1 norm of a rational row after clearing denominators with their lcm."""
    values = [Fraction(v) for v in values]
    den = 1
    for v in values:
        den = lcm(den, v.denominator)
    return sum(abs(v.numerator * (den // v.denominator)) for v in values)
