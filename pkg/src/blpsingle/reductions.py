"""Instance builders: CNF encoding, the penalty transform, SAT -> BLP_single
and 0-1 ILP -> BLP_single."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .exact_arith import format_rational, max_entry_size, size
from .model_io import BlpGeneral, BlpSingle, Cnf, ZeroOneIlp, format_dimacs
from .tent_map import CODEC_ILP, CODEC_SAT, weighted_costs

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class CnfMatrix:
    A: tuple  # p x n integer rows
    a: tuple  # negated-literal count per clause

    def satisfied_by(self, mu: Sequence[int]) -> bool:
        return all(sum(c * v for c, v in zip(row, mu)) >= 1 - rhs for row, rhs in zip(self.A, self.a))


def cnf_matrix(cnf: Cnf) -> CnfMatrix:
    """Literal u_i adds +1 to entry (j, i); literal not-u_i adds -1 there and +1 to a_j."""
    rows = []
    a = []
    for clause in cnf.clauses:
        row = [0] * cnf.nvars
        neg = 0
        for lit in clause:
            if lit > 0:
                row[lit - 1] += 1
            else:
                row[-lit - 1] -= 1
                neg += 1
        rows.append(tuple(row))
        a.append(neg)
    return CnfMatrix(tuple(rows), tuple(a))


def build_BF(cnf: Cnf) -> tuple:
    """Rows of B_F z >= b_F over z = (x_1..x_n, y), p + 2n rows."""
    enc = cnf_matrix(cnf)
    n = cnf.nvars
    B, rhs = [], []
    for row, neg in zip(enc.A, enc.a):
        B.append(tuple(Fraction(v) for v in row) + (HALF,))
        rhs.append(Fraction(3, 2) - neg)
    for i in range(n):
        unit = [Fraction(0)] * n
        unit[i] = Fraction(1)
        B.append(tuple(unit) + (HALF,))
        rhs.append(HALF)
        B.append(tuple(-v for v in unit) + (HALF,))
        rhs.append(-HALF)
    return tuple(B), tuple(rhs)


def pad_clauses(cnf: Cnf) -> Cnf:
    """Repeat the last literal of each short clause until it has three.

    Satisfiability is unchanged.  The B_F rows need exactly three literal
    occurrences per clause for the all-halves point x = 1/2, y = 0 to
    satisfy them, which the unsatisfiable branch of the value dichotomy
    relies on.
    """
    clauses = tuple(tuple(c) + (c[-1],) * (3 - len(c)) for c in cnf.clauses)
    return Cnf(cnf.nvars, clauses)


def f_sol_bound(n: int, sigma: int) -> int:
    """Bit-size bound 4 n^2 (n+1) sigma for an optimal solution of an
    ``n``-variable problem whose data entries have size <= ``sigma``."""
    if n < 1 or sigma < 1:
        raise ValueError("n and sigma must be >= 1")
    return 4 * n * n * (n + 1) * sigma


def _inf_norm(values) -> Fraction:
    return max((abs(Fraction(v)) for v in values), default=Fraction(0))


def penalty_threshold(g: BlpGeneral) -> Fraction:
    """3 n c_inf 4^f_sol(n+1, sigma) for the penalty transform of ``g``."""
    n = g.n1 + g.n2
    sigma = max_entry_size(g.A11, g.A12, g.A21, g.A22, g.Ab21, g.Ab22, g.b1, g.b2, g.bb2)
    sigma = max(sigma, 1)
    c_inf = max(_inf_norm(g.c21), _inf_norm(g.c22), Fraction(1))
    return 3 * n * c_inf * Fraction(4) ** f_sol_bound(n + 1, sigma)


def apply_penalty(g: BlpGeneral, M, e_cap: Optional[int] = 1) -> BlpGeneral:
    """Move the penalizable upper rows into the lower level with slack e.

    The new lower variable e is appended last.  ``e_cap`` is 1 or None
    (unbounded above).  ``meta["certified"]`` records whether M reaches
    :func:`penalty_threshold`.
    """
    if e_cap not in (1, None):
        raise ValueError("e_cap must be 1 or None")
    M = Fraction(M)
    threshold = penalty_threshold(g)
    zero = Fraction(0)
    one = Fraction(1)
    n2 = g.n2
    A11 = [tuple(r) + (zero,) for r in g.A11]
    A12 = [tuple(r) for r in g.A12]
    b1 = list(g.b1)
    for r, r2, rhs in zip(g.Ab21, g.Ab22, g.bb2):
        A11.append(tuple(r) + (one,))
        A12.append(tuple(r2))
        b1.append(rhs)
    e_row = [zero] * g.n1 + [one]
    A11.append(tuple(e_row))
    A12.append((zero,) * n2)
    b1.append(zero)
    if e_cap == 1:
        A11.append(tuple(-v for v in e_row))
        A12.append((zero,) * n2)
        b1.append(-one)
    names = tuple(g.lower_names) + ("e",) if g.lower_names else ()
    meta = dict(g.meta)
    meta.update({"M": M, "penalty_threshold": threshold, "certified": M >= threshold, "e_cap": e_cap})
    return BlpGeneral(
        c11=tuple(g.c11) + (zero,),
        A11=A11,
        A12=A12,
        b1=b1,
        c21=tuple(g.c21) + (M,),
        c22=g.c22,
        A21=[tuple(r) + (zero,) for r in g.A21],
        A22=g.A22,
        b2=g.b2,
        lower_names=names,
        meta=meta,
    )


# -- shared tent-map block ---------------------------------------------------------


def _chain_layout(length: int) -> dict:
    layout = {}
    col = 0
    for blk in ("z", "f", "s", "t", "u"):
        layout[blk] = list(range(col, col + length))
        col += length
    layout["e"] = col
    return layout


def _chain_rows(length: int, layout: dict, nvars: int):
    """The tent-map feasible set as >= rows (A11 part, x2 coefficient, rhs).

    Equalities are emitted as opposite pairs; unit boxes stay implicit.
    """
    rows = []

    def add(coeffs: dict, a12, rhs, equality=False):
        r = [Fraction(0)] * nvars
        for j, v in coeffs.items():
            r[j] += Fraction(v)
        rows.append((tuple(r), Fraction(a12), Fraction(rhs)))
        if equality:
            rows.append((tuple(-v for v in r), -Fraction(a12), -Fraction(rhs)))

    z, f, s, t, u = (layout[k] for k in ("z", "f", "s", "t", "u"))
    add({u[length - 1]: 1}, -1, 0, equality=True)
    for i in range(length):
        add({s[i]: 1, u[i]: Fraction(-3, 2)}, 0, -HALF)
        add({t[i]: 1, u[i]: Fraction(-3, 2)}, 0, -1)
        add({z[i]: 1, s[i]: -2, t[i]: 2}, 0, 0, equality=True)
        add({f[i]: 1, z[i]: -1}, 0, -HALF)
        add({f[i]: 1, z[i]: 1}, 0, HALF)
    for i in range(1, length):
        add({u[i - 1]: 1, u[i]: -3, z[i]: 2}, 0, 0, equality=True)
    return rows


def _chain_lower_cost(length: int, layout: dict, nvars: int) -> list:
    st, fw = weighted_costs(length, 1)
    c = [Fraction(0)] * nvars
    for i in range(length):
        c[layout["s"][i]] = c[layout["t"][i]] = st[i]
        c[layout["f"][i]] = fw[i]
    return c


def _layout_meta(layout: dict) -> dict:
    out = {k: list(v) if isinstance(v, list) else v for k, v in layout.items()}
    out["theta"] = "x2"
    return out


# -- SAT --------------------------------------------------------------------------

SIZE_SIX = size(6)


def sat_penalty_M(n: int) -> Fraction:
    """3 (5n + 7) 4^(f_sol(5n + 3, size(6)) + 1)."""
    return Fraction(3 * (5 * n + 7)) * Fraction(4) ** (f_sol_bound(5 * n + 3, SIZE_SIX) + 1)


@dataclass(frozen=True)
class SatBlpArtifacts:
    instance: BlpSingle
    BF: tuple
    bF: tuple
    M: Fraction
    n: int
    p: int
    layout: dict
    threshold: Fraction
    certified: bool
    cnf: Cnf = field(repr=False, default=None)


def sat_multi_general(cnf: Cnf) -> BlpGeneral:
    """The weighted multi-variable program with B_F z >= b_F as penalizable
    upper rows; lower boxes explicit, theta box in the plain upper rows."""
    padded = pad_clauses(cnf)
    n = cnf.nvars
    L = n + 1
    layout = _chain_layout(L)
    nv = 5 * L
    A11, A12, b1 = [], [], []
    for r, a12, rhs in _chain_rows(L, layout, nv):
        A11.append(r)
        A12.append((a12,))
        b1.append(rhs)
    for j in range(nv):
        unit = [Fraction(0)] * nv
        unit[j] = Fraction(1)
        A11 += [tuple(unit), tuple(-v for v in unit)]
        A12 += [(Fraction(0),), (Fraction(0),)]
        b1 += [Fraction(0), Fraction(-1)]
    BF, bF = build_BF(padded)
    Ab21 = []
    for row in BF:
        r = [Fraction(0)] * nv
        for k, col in enumerate(layout["z"]):
            r[col] = row[k]
        Ab21.append(tuple(r))
    c21 = _sat_upper_cost(n, layout, nv)
    return BlpGeneral(
        c11=_chain_lower_cost(L, layout, nv),
        A11=A11,
        A12=A12,
        b1=b1,
        c21=c21,
        c22=(Fraction(0),),
        A21=[(Fraction(0),) * nv, (Fraction(0),) * nv],
        A22=[(Fraction(1),), (Fraction(-1),)],
        b2=[Fraction(0), Fraction(-1)],
        Ab21=Ab21,
        Ab22=[(Fraction(0),)] * len(Ab21),
        bb2=bF,
    )


def _sat_upper_cost(n: int, layout: dict, nvars: int) -> list:
    c = [Fraction(0)] * nvars
    c[layout["z"][n]] = Fraction(2 * n)
    for i in range(n):
        c[layout["f"][i]] = Fraction(-4) - Fraction(2, n)
    return c


def build_sat_blp(cnf: Cnf, *, m_policy: str = "formula") -> SatBlpArtifacts:
    """Compile a 3CNF formula into a single-upper-variable bilevel LP.

    ``m_policy="formula"`` uses the closed-form penalty 3(5n+7)4^(...);
    ``"certified"`` uses max(closed form, threshold of the multi-variable program).
    """
    if m_policy not in ("formula", "certified"):
        raise ValueError(f"unknown m_policy {m_policy!r}")
    n = cnf.nvars
    if n < 1:
        raise ValueError("the formula needs at least one variable")
    padded = pad_clauses(cnf)
    L = n + 1
    layout = _chain_layout(L)
    nv = 5 * L + 1
    e = layout["e"]
    threshold = penalty_threshold(sat_multi_general(cnf))
    M = sat_penalty_M(n)
    if m_policy == "certified":
        M = max(M, threshold)

    BF, bF = build_BF(padded)
    A11, A12, b1 = [], [], []
    for row, rhs in zip(BF, bF):
        r = [Fraction(0)] * nv
        for k, col in enumerate(layout["z"]):
            r[col] = row[k]
        r[e] = Fraction(1)
        A11.append(r)
        A12.append(Fraction(0))
        b1.append(rhs)
    for r, a12, rhs in _chain_rows(L, layout, nv):
        A11.append(r)
        A12.append(a12)
        b1.append(rhs)
    c11 = _chain_lower_cost(L, layout, nv)
    c21 = _sat_upper_cost(n, layout, nv)
    c21[e] = M
    meta = {
        "provenance": "sat",
        "codec": CODEC_SAT,
        "n": n,
        "p": cnf.p,
        "M": format_rational(M),
        "M_policy": m_policy,
        "penalty_threshold_log4": _log4_descr(threshold),
        "certified": M >= threshold,
        "layout": _layout_meta(layout),
        "source_digest": hashlib.sha256(format_dimacs(cnf).encode()).hexdigest(),
    }
    inst = BlpSingle(nv, len(b1), c11, c21, 0, A11, A12, b1, meta=meta)
    return SatBlpArtifacts(inst, BF, bF, M, n, cnf.p, layout, threshold, M >= threshold, cnf)


def _log4_descr(value: Fraction) -> str:
    """Compact "k*4^e" text for thresholds too long to print in full."""
    num = value.numerator
    den = value.denominator
    e = 0
    if num:
        e = ((num & -num).bit_length() - 1) // 2
        num >>= 2 * e
    coeff = Fraction(num, den)
    return f"{format_rational(coeff)}*4^{e}"


# -- 0-1 ILP ------------------------------------------------------------------------


@dataclass(frozen=True)
class IlpBlpArtifacts:
    instance: BlpSingle
    A: tuple  # scaled rows
    a: tuple
    M: Fraction
    r: int
    layout: dict
    ilp: ZeroOneIlp = field(repr=False, default=None)


def scale_ilp_rows(ilp: ZeroOneIlp) -> tuple:
    """Divide each row (A_j, a_j) by max(1, |a_j|) so that a_j lies in [-1, 1]."""
    A, a = [], []
    for row, rhs in zip(ilp.A, ilp.a):
        k = max(Fraction(1), abs(rhs))
        A.append(tuple(v / k for v in row))
        a.append(rhs / k)
    return tuple(A), tuple(a)


def ilp_multi_general(ilp: ZeroOneIlp) -> BlpGeneral:
    """The intermediate program with A z >= a and f_i >= 1/2 as penalizable upper rows."""
    r = ilp.r
    layout = _chain_layout(r)
    nv = 5 * r
    A_s, a_s = scale_ilp_rows(ilp)
    A11, A12, b1 = [], [], []
    for row, a12, rhs in _chain_rows(r, layout, nv):
        A11.append(row)
        A12.append((a12,))
        b1.append(rhs)
    for j in range(nv):
        unit = [Fraction(0)] * nv
        unit[j] = Fraction(1)
        A11 += [tuple(unit), tuple(-v for v in unit)]
        A12 += [(Fraction(0),), (Fraction(0),)]
        b1 += [Fraction(0), Fraction(-1)]
    Ab21, bb2 = [], []
    for row, rhs in zip(A_s, a_s):
        rr = [Fraction(0)] * nv
        for k, col in enumerate(layout["z"]):
            rr[col] = row[k]
        Ab21.append(tuple(rr))
        bb2.append(rhs)
    for i in range(r):
        rr = [Fraction(0)] * nv
        rr[layout["f"][i]] = Fraction(1)
        Ab21.append(tuple(rr))
        bb2.append(HALF)
    c21 = [Fraction(0)] * nv
    for k, col in enumerate(layout["z"]):
        c21[col] = ilp.c[k]
    return BlpGeneral(
        c11=_chain_lower_cost(r, layout, nv),
        A11=A11,
        A12=A12,
        b1=b1,
        c21=c21,
        c22=(Fraction(0),),
        A21=[(Fraction(0),) * nv, (Fraction(0),) * nv],
        A22=[(Fraction(1),), (Fraction(-1),)],
        b2=[Fraction(0), Fraction(-1)],
        Ab21=Ab21,
        Ab22=[(Fraction(0),)] * len(Ab21),
        bb2=bb2,
    )


def ilp_to_blp(ilp: ZeroOneIlp) -> IlpBlpArtifacts:
    """Compile min{c.z : A z >= a, z binary} into a single-upper-variable bilevel LP."""
    r = ilp.r
    if r < 1:
        raise ValueError("the ILP needs at least one variable")
    layout = _chain_layout(r)
    nv = 5 * r + 1
    e = layout["e"]
    A_s, a_s = scale_ilp_rows(ilp)
    M = penalty_threshold(ilp_multi_general(ilp))
    A11, A12, b1 = [], [], []
    for row, rhs in zip(A_s, a_s):
        rr = [Fraction(0)] * nv
        for k, col in enumerate(layout["z"]):
            rr[col] = row[k]
        rr[e] = Fraction(1)
        A11.append(rr)
        A12.append(Fraction(0))
        b1.append(rhs)
    for i in range(r):
        rr = [Fraction(0)] * nv
        rr[layout["f"][i]] = Fraction(1)
        rr[e] = Fraction(1)
        A11.append(rr)
        A12.append(Fraction(0))
        b1.append(HALF)
    for row, a12, rhs in _chain_rows(r, layout, nv):
        A11.append(row)
        A12.append(a12)
        b1.append(rhs)
    c11 = _chain_lower_cost(r, layout, nv)
    c21 = [Fraction(0)] * nv
    for k, col in enumerate(layout["z"]):
        c21[col] = ilp.c[k]
    c21[e] = M
    meta = {
        "provenance": "ilp",
        "codec": CODEC_ILP,
        "r": r,
        "M": format_rational(M),
        "M_policy": "threshold",
        "certified": True,
        "layout": _layout_meta(layout),
    }
    inst = BlpSingle(nv, len(b1), c11, c21, 0, A11, A12, b1, meta=meta)
    return IlpBlpArtifacts(inst, A_s, a_s, M, r, layout, ilp)
