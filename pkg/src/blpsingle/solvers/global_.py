"""Global oracles (breakpoint sweep, candidate theta, complementarity
enumeration) and the bilevel feasibility check."""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Optional, Sequence, Union

from ..exact_arith import format_rational
from ..lex_simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp
from ..model_io import BlpGeneral, BlpSingle, LexLp
from ..tent_map import CODEC_ILP, CODEC_SAT, encode_mu, lower_chain, solve_lower_analytic
from .local import breakpoint_size_bound
from .standard import LowerInfeasible, PsiEvaluator, StandardBlp, to_standard_form


class ContinuityError(AssertionError):
    """Adjacent psi segments disagree at their shared breakpoint."""


@dataclass(frozen=True)
class PsiProfile:
    lo: Fraction
    hi: Fraction
    breakpoints: tuple
    values: tuple
    slopes: tuple

    def value_at(self, x2) -> Fraction:
        x2 = Fraction(x2)
        if not self.lo <= x2 <= self.hi:
            raise ValueError(f"{x2} outside [{self.lo}, {self.hi}]")
        bps = self.breakpoints
        for k in range(len(self.slopes)):
            if bps[k] <= x2 <= bps[k + 1]:
                return self.values[k] + self.slopes[k] * (x2 - bps[k])
        return self.values[0]

    def minimum(self) -> tuple:
        """(value, x2) of the global minimum; smallest x2 on ties."""
        best = min(self.values)
        return best, self.breakpoints[self.values.index(best)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("breakpoint,value,slope_right\n")
        for k, (bp, val) in enumerate(zip(self.breakpoints, self.values)):
            slope = format_rational(self.slopes[k]) if k < len(self.slopes) else ""
            buf.write(f"{format_rational(bp)},{format_rational(val)},{slope}\n")
        return buf.getvalue()


def psi_profile(std: Union[StandardBlp, BlpSingle], evaluator: Optional[PsiEvaluator] = None) -> Optional[PsiProfile]:
    """Walk [l, u] basis by basis.

    After a stability interval ends at b, the next lex solve happens at
    b + 2^(-2s-1).  Distinct breakpoints are more than 2^(2-2s) apart, so
    the basis found there is valid back to b and no segment is skipped.
    Returns None when the lower level is infeasible for every x2.
    """
    if isinstance(std, BlpSingle):
        std = to_standard_form(std)
    ev = evaluator or PsiEvaluator(std)
    if ev.bounds is None:
        return None
    l, u = ev.bounds.lo, ev.bounds.hi
    if l == u:
        return PsiProfile(l, u, (l,), (ev(l),), ())
    s = breakpoint_size_bound(std)
    delta = Fraction(1, 2 ** (2 * s + 1))
    segments = []  # (start, end, value_start, value_end, slope)
    cur = l
    probe = l
    while cur < u:
        fac = ev.factor(probe)
        a, b = fac.interval(probe)
        b = u if b is None else min(b, u)
        a = l if a is None else max(a, l)
        if b > cur:
            if a > cur:  # pragma: no cover - excluded by the breakpoint gap
                raise ContinuityError(f"basis at {probe} starts at {a} > {cur}")
            segments.append((cur, b, ev.value_from(fac, cur), ev.value_from(fac, b), ev.slope_from(fac)))
            cur = b
        probe = min(cur + delta, u)
    bps = [segments[0][0]]
    vals = [segments[0][2]]
    slopes = []
    for start, end, v0, v1, slope in segments:
        if v0 != vals[-1]:
            raise ContinuityError(f"psi jumps at {start}: {vals[-1]} vs {v0}")
        if slopes and slope == slopes[-1]:
            bps[-1] = end
            vals[-1] = v1
        else:
            slopes.append(slope)
            bps.append(end)
            vals.append(v1)
    return PsiProfile(l, u, tuple(bps), tuple(vals), tuple(slopes))


def global_solve_sweep(std: Union[StandardBlp, BlpSingle]):
    """(value, x2) minimizing psi; None if the lower level is never feasible."""
    prof = psi_profile(std)
    if prof is None:
        return None
    return prof.minimum()


# -- candidate theta --------------------------------------------------------------


def _instance_of(obj) -> BlpSingle:
    return obj.instance if hasattr(obj, "instance") else obj


def _row_slack(inst: BlpSingle, x1, x2):
    for row, a12, rhs in zip(inst.A11, inst.A12, inst.b1):
        yield sum((a * v for a, v in zip(row, x1) if a and v), Fraction(0)) + a12 * x2 - rhs


def _sat_value(inst: BlpSingle, n: int, layout: dict, theta: Fraction) -> Fraction:
    sol = solve_lower_analytic(n, theta)
    e_col = layout["e"]
    x1 = [Fraction(0)] * inst.n
    for blk in ("z", "f", "s", "t", "u"):
        for col, v in zip(layout[blk], getattr(sol, blk)):
            x1[col] = v
    # smallest e in [0, 1] restoring every row with a unit e coefficient
    need = Fraction(0)
    for row, slack in zip(inst.A11, _row_slack(inst, x1, theta)):
        if slack < 0:
            if row[e_col] <= 0:
                raise ValueError(f"analytic lower solution violates a row at theta = {theta}")
            need = max(need, -slack / row[e_col])
    if need > 1:
        raise ValueError(f"no admissible e at theta = {theta}")
    x1[e_col] = need
    return sum((c * v for c, v in zip(inst.c21, x1) if c and v), Fraction(0)) + inst.c22 * theta


def candidate_thetas(inst: BlpSingle) -> list:
    meta = inst.meta
    prov = meta.get("provenance")
    if prov == "sat":
        n = int(meta["n"])
        thetas = {Fraction(1, 6)} | {encode_mu(mu, CODEC_SAT) for mu in product((0, 1), repeat=n)}
    elif prov == "ilp":
        r = int(meta["r"])
        thetas = {encode_mu(mu, CODEC_ILP) for mu in product((0, 1), repeat=r)}
    else:
        raise ValueError(f"candidate oracle needs provenance 'sat' or 'ilp', got {prov!r}")
    return sorted(thetas)


def _layout(meta: dict) -> dict:
    lay = dict(meta["layout"])
    lay.pop("theta", None)
    return {k: (list(v) if isinstance(v, (list, tuple)) else int(v)) for k, v in lay.items()}


def _candidate_value(args):
    inst, theta = args
    prov = inst.meta["provenance"]
    if prov == "sat":
        return _sat_value(inst, int(inst.meta["n"]), _layout(inst.meta), theta)
    return _psi_or_none(PsiEvaluator(to_standard_form(inst)), theta)


def _psi_or_none(ev: PsiEvaluator, theta):
    try:
        return ev(theta)
    except LowerInfeasible:
        return None


def global_solve_candidates(obj, jobs: int = 1) -> Optional[tuple]:
    """Minimum of the upper objective over the reduction's candidate thetas.

    SAT instances: theta in {1/6} and every encoded assignment, valued with
    the closed-form lower solution and the least admissible e.  ILP
    instances: every encoded assignment, valued by an exact psi evaluation;
    thetas where the lower level is infeasible are skipped.
    Returns (value, theta), smallest theta on ties, or None if no candidate
    is bilevel feasible.
    """
    inst = _instance_of(obj)
    thetas = candidate_thetas(inst)
    if jobs > 1 and len(thetas) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_candidate_value, [(inst, t) for t in thetas]))
    elif inst.meta.get("provenance") == "ilp":
        ev = PsiEvaluator(to_standard_form(inst))
        values = [_psi_or_none(ev, t) for t in thetas]
    else:
        values = [_candidate_value((inst, t)) for t in thetas]
    scored = [(v, t) for v, t in zip(values, thetas) if v is not None]
    if not scored:
        return None
    return min(scored)


# -- complementarity-pattern enumeration ----------------------------------------------


@dataclass(frozen=True)
class OmegaResult:
    status: str  # "solved" | "infeasible" | "unbounded" | "too_large"
    value: Optional[Fraction] = None
    x1: Optional[tuple] = None
    x2: Optional[tuple] = None
    patterns: int = 0
    probe_max: Optional[Fraction] = None


SOLVED = "solved"
TOO_LARGE = "too_large"


def _ge_system_lp(rows, nfree: int, equal_rows: set, objectives) -> LexLp:
    """LexLp over free variables y (nfree) with rows a.y >= b (or = b for
    indices in ``equal_rows``); surplus columns are appended."""
    ineq = [k for k in range(len(rows)) if k not in equal_rows]
    nv = nfree + len(ineq)
    A, b = [], []
    pos = {k: nfree + i for i, k in enumerate(ineq)}
    for k, (coef, rhs) in enumerate(rows):
        r = list(coef) + [Fraction(0)] * len(ineq)
        if k in pos:
            r[pos[k]] = Fraction(-1)
        A.append(r)
        b.append(rhs)
    lo = [None] * nfree + [Fraction(0)] * len(ineq)
    hi = [None] * nv
    objs = [list(c) + [Fraction(0)] * len(ineq) for c in objectives]
    return LexLp(nv, A, b, lo, hi, objs)


def _has_certificate(g: BlpGeneral, omega: Sequence[int]) -> bool:
    """Is there lambda >= 0 supported on omega with A11^T lambda = c11?"""
    k = len(omega)
    if k == 0:
        return not any(g.c11)
    A = [[g.A11[i][j] for i in omega] for j in range(g.n1)]
    lp = LexLp(k, A, g.c11, [Fraction(0)] * k, [None] * k, [[Fraction(0)] * k])
    return solve_lp(lp).status == OPTIMAL


def _pattern_rows(g: BlpGeneral):
    rows = []
    for a, b_, r in zip(g.A11, g.A12, g.b1):
        rows.append((tuple(a) + tuple(b_), r))
    for a, b_, r in zip(g.A21, g.A22, g.b2):
        rows.append((tuple(a) + tuple(b_), r))
    for a, b_, r in zip(g.Ab21, g.Ab22, g.bb2):
        rows.append((tuple(a) + tuple(b_), r))
    return rows


def _solve_pattern(args):
    g, omega, probe = args
    rows = _pattern_rows(g)
    nfree = g.n1 + g.n2
    cost = tuple(g.c21) + tuple(g.c22)
    lp = _ge_system_lp(rows, nfree, set(omega), [cost])
    res = solve_lp(lp)
    if res.status != OPTIMAL:
        return res.status, None, None, None, None
    vals = res.solution.values
    value = res.solution.objective_values[0]
    probe_max = None
    if probe is not None:
        # maximize the probe column over this pattern's optimal face
        pin_rows = rows + [(cost, value), (tuple(-c for c in cost), -value)]
        obj = [Fraction(0)] * nfree
        obj[probe] = Fraction(-1)
        res2 = solve_lp(_ge_system_lp(pin_rows, nfree, set(omega), [obj]))
        probe_max = -res2.solution.objective_values[0] if res2.status == OPTIMAL else None
        if res2.status == UNBOUNDED:
            probe_max = float("inf")
    return OPTIMAL, value, tuple(vals[: g.n1]), tuple(vals[g.n1 : nfree]), probe_max


def global_solve_omega(g: BlpGeneral, cap: int = 14, probe: Optional[int] = None, jobs: int = 1) -> OmegaResult:
    """Exact bilevel optimum by enumerating lower-level active sets.

    A pattern omega is admissible when some dual multiplier supported on
    omega certifies lower optimality; the bilevel feasible set is the union
    of the polyhedra with the omega rows tight.  Admissibility is inherited
    by supersets, whose polyhedra are smaller, so only inclusion-minimal
    admissible patterns are solved.  ``probe`` (a lower column index)
    additionally reports the largest value that column takes over all
    optimal points.
    """
    m1 = g.m1
    if m1 > cap:
        return OmegaResult(TOO_LARGE)
    minimal = []
    for k in range(m1 + 1):
        for omega in _combinations(m1, k):
            mask = sum(1 << i for i in omega)
            if any(mask & mm == mm for mm in (x[0] for x in minimal)):
                continue
            if _has_certificate(g, omega):
                minimal.append((mask, omega))
    if not minimal:
        return OmegaResult(INFEASIBLE, patterns=0)
    tasks = [(g, omega, probe) for _, omega in minimal]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_solve_pattern, tasks))
    else:
        outcomes = [_solve_pattern(t) for t in tasks]
    best = None
    for status, value, x1, x2, pmax in outcomes:
        if status == UNBOUNDED:
            return OmegaResult(UNBOUNDED, patterns=len(tasks))
        if status != OPTIMAL:
            continue
        key = (value, x2)
        if best is None or key < (best[0], best[2]):
            best = [value, x1, x2, None]
    if best is None:
        return OmegaResult(INFEASIBLE, patterns=len(tasks))
    if probe is not None:
        best[3] = max(p for st, v, _, _, p in outcomes if st == OPTIMAL and v == best[0])
    return OmegaResult(SOLVED, best[0], best[1], best[2], len(tasks), best[3])


def _combinations(m: int, k: int):
    return combinations(range(m), k)


# -- conversions and verification ---------------------------------------------------


def single_to_general(b: BlpSingle) -> BlpGeneral:
    """Same problem with the implicit unit boxes written as explicit rows.

    x1 boxes go to the lower level, the x2 box to the plain upper rows.
    """
    zero, one = Fraction(0), Fraction(1)
    A11 = [tuple(r) for r in b.A11]
    A12 = [(v,) for v in b.A12]
    b1 = list(b.b1)
    for j in range(b.n):
        unit = [zero] * b.n
        unit[j] = one
        A11 += [tuple(unit), tuple(-v for v in unit)]
        A12 += [(zero,), (zero,)]
        b1 += [zero, -one]
    return BlpGeneral(
        c11=b.c11,
        A11=A11,
        A12=A12,
        b1=b1,
        c21=b.c21,
        c22=(b.c22,),
        A21=[(zero,) * b.n, (zero,) * b.n],
        A22=[(one,), (-one,)],
        b2=[zero, -one],
    )


def lower_value(b: BlpSingle, x2) -> Optional[Fraction]:
    """Optimal lower objective at fixed x2, or None if the lower level is infeasible.

    Opposite row pairs become one equality row, every other row gets a
    surplus column.
    """
    x2 = Fraction(x2)
    n = b.n
    rows = {}
    order = []
    for k in range(b.m):
        key = (b.A11[k], b.b1[k] - b.A12[k] * x2)
        neg = (tuple(-v for v in key[0]), -key[1])
        if neg in rows and not rows[neg]:
            rows[neg] = True
            continue
        if key not in rows:
            rows[key] = False
            order.append(key)
    n_sur = sum(1 for key in order if not rows[key])
    nv = n + n_sur
    A, rhs = [], []
    col = n
    zero = Fraction(0)
    for key in order:
        r = list(key[0]) + [zero] * n_sur
        if not rows[key]:
            r[col] = Fraction(-1)
            col += 1
        A.append(r)
        rhs.append(key[1])
    lo = [zero] * nv
    hi = [Fraction(1)] * n + [None] * n_sur
    obj = list(b.c11) + [zero] * n_sur
    res = solve_lp(LexLp(nv, A, rhs, lo, hi, [obj]))
    if res.status != OPTIMAL:
        return None
    return res.solution.objective_values[0]


def check_bilevel_feasible(b: BlpSingle, x2, x1: Sequence) -> bool:
    """True iff (x1, x2) satisfies every lower row and box and x1 is lower-optimal."""
    x1 = [Fraction(v) for v in x1]
    if len(x1) != b.n:
        raise ValueError(f"x1 has length {len(x1)}, expected {b.n}")
    x2 = Fraction(x2)
    if not 0 <= x2 <= 1 or any(not 0 <= v <= 1 for v in x1):
        return False
    if any(s < 0 for s in _row_slack(b, x1, x2)):
        return False
    best = lower_value(b, x2)
    if best is None:  # pragma: no cover - (x1, x2) itself is feasible
        return False
    return sum((c * v for c, v in zip(b.c11, x1) if c and v), Fraction(0)) == best


def decode_lower_point(b: BlpSingle, theta) -> tuple:
    """x1 built from the closed-form lower solution for a reduction instance
    (e = 1 for SAT instances, the bilevel-feasible witness point)."""
    meta = b.meta
    lay = _layout(meta)
    theta = Fraction(theta)
    if meta.get("provenance") == "sat":
        sol = solve_lower_analytic(int(meta["n"]), theta)
    else:
        sol = lower_chain(int(meta["r"]), theta)
    x1 = [Fraction(0)] * b.n
    for blk in ("z", "f", "s", "t", "u"):
        for col, v in zip(lay[blk], getattr(sol, blk)):
            x1[col] = v
    x1[lay["e"]] = Fraction(1)
    return tuple(x1)
