"""Closed-form lower level of the SAT/ILP reductions.

A single scalar theta drives the recursion u_{i-1} = 3 u_i - 2 z_i down a
chain of ``length`` coordinates; each z_i reads one ternary "digit" of u_i.
Indices in the docstrings are 1-based as in the construction; Python tuples
are 0-based, so coordinate i lives at position i - 1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .exact_arith import format_decimal, format_rational
from .model_io import LexLp

THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)
HALF = Fraction(1, 2)

CODEC_SAT = "lemma4iii"
CODEC_ILP = "section5"
CODECS = (CODEC_SAT, CODEC_ILP)

# Printed middle branch of the tent map is -3x+1; -3x+2 is what the
# recursion u_{i-1} = 3u_i - 2z_i actually produces.
F_U_DEVIATION = (
    "f_u middle branch uses -3*theta+2 on [1/3, 2/3); the printed -3*theta+1 "
    "violates u_(i-1) = 3u_i - 2z_i and the fixed point at 1/2"
)


def _check_unit(theta) -> Fraction:
    theta = Fraction(theta)
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return theta


def f_z(theta) -> Fraction:
    theta = _check_unit(theta)
    if theta < THIRD:
        return Fraction(0)
    if theta < TWO_THIRDS:
        return 3 * theta - 1
    return Fraction(1)


def f_u(theta) -> Fraction:
    theta = _check_unit(theta)
    if theta < THIRD:
        return 3 * theta
    if theta < TWO_THIRDS:
        return 2 - 3 * theta
    return 3 * theta - 2


def _pos(x: Fraction) -> Fraction:
    return x if x > 0 else Fraction(0)


@dataclass(frozen=True)
class LowerSolution:
    z: tuple
    f: tuple
    s: tuple
    t: tuple
    u: tuple

    @property
    def length(self) -> int:
        return len(self.z)

    @property
    def theta(self) -> Fraction:
        return self.u[-1]

    def as_vector(self) -> tuple:
        """Concatenation (z, f, s, t, u), the column order of :func:`lower_lex_lp`."""
        return self.z + self.f + self.s + self.t + self.u


def lower_chain(length: int, theta) -> LowerSolution:
    """Unique lexicographic optimum of the tent-map lower level with ``length`` coordinates."""
    if length < 1:
        raise ValueError("length must be >= 1")
    theta = _check_unit(theta)
    u = [Fraction(0)] * length
    u[-1] = theta
    for i in range(length - 1, 0, -1):
        u[i - 1] = f_u(u[i])
    s = tuple(_pos(Fraction(3, 2) * v - HALF) for v in u)
    t = tuple(_pos(Fraction(3, 2) * v - 1) for v in u)
    z = tuple(f_z(v) for v in u)
    f = tuple(abs(v - HALF) for v in z)
    return LowerSolution(z, f, s, t, tuple(u))


def solve_lower_analytic(n: int, theta) -> LowerSolution:
    """Lower-level optimum for ``n`` SAT variables (sequences of length n + 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return lower_chain(n + 1, theta)


def encode_mu(mu: Sequence[int], codec: str = CODEC_SAT) -> Fraction:
    """Map a binary vector to theta.

    ``lemma4iii``: theta = 2/3 (1 + sum mu_i / 3^(n+1-i)), lands in [2/3, 1].
    ``section5``:  theta = 2/3 sum mu_i / 3^(r-i), no leading term.
    """
    mu = tuple(mu)
    if any(v not in (0, 1) for v in mu):
        raise ValueError(f"mu must be binary, got {mu}")
    k = len(mu)
    if codec == CODEC_SAT:
        acc = 1 + sum(Fraction(v, 3 ** (k + 1 - i)) for i, v in enumerate(mu, start=1))
    elif codec == CODEC_ILP:
        acc = sum((Fraction(v, 3 ** (k - i)) for i, v in enumerate(mu, start=1)), Fraction(0))
    else:
        raise ValueError(f"unknown codec {codec!r}")
    return TWO_THIRDS * acc


@dataclass(frozen=True)
class Binary:
    mu: tuple
    z_top: Optional[int] = None


@dataclass(frozen=True)
class NonBinary:
    z: tuple


def decode_theta(theta, n: int, codec: str = CODEC_SAT):
    """Read mu off the analytic lower solution; ``NonBinary`` if some z_i is fractional.

    With ``lemma4iii`` the chain has n + 1 coordinates and the top one is
    reported separately as ``z_top``; with ``section5`` all n are mu.
    """
    if codec == CODEC_SAT:
        sol = solve_lower_analytic(n, theta)
    elif codec == CODEC_ILP:
        sol = lower_chain(n, theta)
    else:
        raise ValueError(f"unknown codec {codec!r}")
    if any(v not in (0, 1) for v in sol.z):
        return NonBinary(sol.z)
    bits = tuple(int(v) for v in sol.z)
    if codec == CODEC_SAT:
        return Binary(bits[:-1], bits[-1])
    return Binary(bits, None)


def weighted_costs(length: int, eta=1) -> tuple:
    """(s/t weights, f weights) of the weighted lower objective over a chain."""
    eta = Fraction(eta)
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    st = tuple(Fraction(16**i) for i in range(1, length + 1))
    fw = tuple(eta / 4 ** (length - i) for i in range(1, length + 1))
    return st, fw


def weighted_objective(n: int, eta=1) -> tuple:
    """Cost vector over (z, f, s, t, u), each block of length n + 1."""
    st, fw = weighted_costs(n + 1, eta)
    zero = (Fraction(0),) * (n + 1)
    return zero + fw + st + st + zero


# -- LexLp builders ------------------------------------------------------------

BLOCKS = ("z", "f", "s", "t", "u")


def lower_lex_lp(length: int, theta, *, weighted: bool = False, eta=1) -> LexLp:
    """Equality-form LexLp of the tent-map lower level.

    Columns: z, f, s, t, u (each ``length``), then ``theta`` (fixed at the
    given value), then nonnegative surplus columns.  Objectives are either
    the lexicographic list (s_L + t_L, ..., s_1 + t_1, sum f) or the single
    weighted objective.
    """
    theta = _check_unit(theta)
    L = length
    col = {}
    names = []
    for blk in BLOCKS:
        for i in range(1, L + 1):
            col[(blk, i)] = len(names)
            names.append(f"{blk}{i}")
    theta_col = len(names)
    names.append("theta")
    rows: list[dict] = []
    rhs: list[Fraction] = []
    n_sur = 0

    def add(coeffs: dict, b, surplus: bool = False):
        nonlocal n_sur
        row = dict(coeffs)
        if surplus:
            row[("sur", n_sur)] = Fraction(-1)
            n_sur += 1
        rows.append(row)
        rhs.append(Fraction(b))

    add({("u", L): 1, "theta": -1}, 0)
    for i in range(1, L + 1):
        add({("s", i): 1, ("u", i): Fraction(-3, 2)}, -HALF, True)
        add({("t", i): 1, ("u", i): Fraction(-3, 2)}, -1, True)
        add({("z", i): 1, ("s", i): -2, ("t", i): 2}, 0)
        add({("f", i): 1, ("z", i): -1}, -HALF, True)
        add({("f", i): 1, ("z", i): 1}, HALF, True)
    for i in range(2, L + 1):
        add({("u", i - 1): 1, ("u", i): -3, ("z", i): 2}, 0)

    nvars = len(names) + n_sur
    names += [f"sur{k}" for k in range(n_sur)]
    A = []
    for row in rows:
        dense = [Fraction(0)] * nvars
        for key, v in row.items():
            if key == "theta":
                dense[theta_col] = Fraction(v)
            elif key[0] == "sur":
                dense[theta_col + 1 + key[1]] = Fraction(v)
            else:
                dense[col[key]] = Fraction(v)
        A.append(dense)
    lo = [Fraction(0)] * nvars
    hi = [Fraction(1)] * (5 * L) + [theta] + [None] * n_sur
    lo[theta_col] = theta

    objectives = []
    if weighted:
        st, fw = weighted_costs(L, eta)
        c = [Fraction(0)] * nvars
        for i in range(1, L + 1):
            c[col[("s", i)]] = c[col[("t", i)]] = st[i - 1]
            c[col[("f", i)]] = fw[i - 1]
        objectives.append(c)
    else:
        for i in range(L, 0, -1):
            c = [Fraction(0)] * nvars
            c[col[("s", i)]] = c[col[("t", i)]] = Fraction(1)
            objectives.append(c)
        c = [Fraction(0)] * nvars
        for i in range(1, L + 1):
            c[col[("f", i)]] = Fraction(1)
        objectives.append(c)
    return LexLp(nvars, A, rhs, lo, hi, objectives, tuple(names))


def lower_solution_from_values(length: int, values: Sequence) -> LowerSolution:
    """Slice (z, f, s, t, u) out of a :func:`lower_lex_lp` solution vector."""
    blocks = [tuple(Fraction(v) for v in values[k * length : (k + 1) * length]) for k in range(5)]
    return LowerSolution(*blocks)


# -- Figure data -----------------------------------------------------------------


@dataclass(frozen=True)
class TentRow:
    theta: Fraction
    u: tuple
    z: tuple


def emit_tentmap_table(n: int, denominator: int) -> list[TentRow]:
    """Rows at theta = k/denominator, k = 0..denominator."""
    if denominator < 1:
        raise ValueError("denominator must be >= 1")
    out = []
    for k in range(denominator + 1):
        theta = Fraction(k, denominator)
        sol = solve_lower_analytic(n, theta)
        out.append(TentRow(theta, sol.u, sol.z))
    return out


def tentmap_csv(rows: Sequence[TentRow], *, decimal: bool = False) -> str:
    if not rows:
        return ""
    L = len(rows[0].u)
    cols = ["theta"] + [f"u{i}" for i in range(1, L + 1)] + [f"z{i}" for i in range(1, L + 1)]
    header = list(cols)
    if decimal:
        header += [c + "_dec" for c in cols]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        vals = (row.theta,) + row.u + row.z
        cells = [format_rational(v) for v in vals]
        if decimal:
            cells += [format_decimal(v) for v in vals]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def tentmap_svg(rows: Sequence[TentRow], width: int = 480, height: int = 320) -> str:
    """Polyline plot of every u_i (solid) and z_i (dashed) against theta."""
    pad = 30
    L = len(rows[0].u) if rows else 0

    def xy(theta, v):
        x = pad + float(theta) * (width - 2 * pad)
        y = height - pad - float(v) * (height - 2 * pad)
        return f"{x:.2f},{y:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#888"/>',
    ]
    for i in range(L):
        colour = _PALETTE[i % len(_PALETTE)]
        for label, attr, dash in (("u", "u", ""), ("z", "z", ' stroke-dasharray="4 3"')):
            pts = " ".join(xy(r.theta, getattr(r, attr)[i]) for r in rows)
            parts.append(
                f'<polyline fill="none" stroke="{colour}"{dash} points="{pts}">'
                f"<title>{label}{i + 1}</title></polyline>"
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
