"""Exact rationals: encoding size, "p/q" text form, continued-fraction rounding.

``Rational`` is :class:`fractions.Fraction` (always reduced, denominator
positive).  The LP kernel may run on ``gmpy2.mpq`` instead; see
:func:`backend` for the switch.
"""

from __future__ import annotations

import os
import re
import sys
from fractions import Fraction
from math import floor
from typing import Iterable, Optional, Sequence

Rational = Fraction

try:  # pragma: no cover - import guard
    import gmpy2

    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover
    gmpy2 = None
    HAVE_GMPY2 = False

ENV_FLAG = "BLPSINGLE_ARITH"

_RATIONAL_RE = re.compile(r"^(-?)(0|[1-9][0-9]*)(?:/([1-9][0-9]*))?$")


class NonCanonicalRational(ValueError):
    """A "p/q" string that parses but is not in reduced canonical form."""


def backend() -> str:
    """Name of the scalar type used inside the simplex kernel.

    ``"mpq"`` when gmpy2 is importable, unless the environment variable
    ``BLPSINGLE_ARITH=fraction`` forces the pure-Python path.
    """
    choice = os.environ.get(ENV_FLAG, "").strip().lower()
    if choice in ("fraction", "python", "pure"):
        return "fraction"
    if choice == "mpq" and not HAVE_GMPY2:
        raise RuntimeError(f"{ENV_FLAG}=mpq requested but gmpy2 is not installed")
    return "mpq" if HAVE_GMPY2 else "fraction"


def kernel_scalar():
    """Constructor for kernel scalars under the active backend."""
    if backend() == "mpq":
        return gmpy2.mpq
    return Fraction


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(int(x.numerator), int(x.denominator))


def _int_to_str(v: int) -> str:
    if HAVE_GMPY2:
        return str(gmpy2.mpz(v))
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    return str(v)


def _str_to_int(s: str) -> int:
    if HAVE_GMPY2:
        return int(gmpy2.mpz(s))
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    return int(s)


def format_rational(r) -> str:
    """Canonical ``"p/q"`` text (``"p"`` when q = 1)."""
    r = to_fraction(r)
    if r.denominator == 1:
        return _int_to_str(r.numerator)
    return f"{_int_to_str(r.numerator)}/{_int_to_str(r.denominator)}"


def parse_rational(text: str, *, strict: bool = True) -> Fraction:
    """Parse ``"p/q"``.

    With ``strict`` (the file-format default) anything other than the
    canonical spelling is rejected: ``"2/4"``, ``"3/1"``, ``"-0"``, ``"0/5"``.
    Non-strict mode accepts any integer ratio and reduces it.
    """
    if not isinstance(text, str):
        raise TypeError(f"rational must be a string, got {type(text).__name__}")
    s = text.strip()
    m = _RATIONAL_RE.match(s)
    if m is None:
        if not strict:
            num, _, den = s.partition("/")
            try:
                return Fraction(_str_to_int(num), _str_to_int(den) if den else 1)
            except (ValueError, ZeroDivisionError) as exc:
                raise ValueError(f"not a rational: {text!r}") from exc
        raise ValueError(f"not a rational: {text!r}")
    sign, p_txt, q_txt = m.groups()
    p = _str_to_int(p_txt)
    q = _str_to_int(q_txt) if q_txt is not None else 1
    value = Fraction(-p if sign else p, q)
    if strict:
        if sign and p == 0:
            raise NonCanonicalRational(f"negative zero: {text!r}")
        if q_txt is not None and (q == 1 or value.denominator != q):
            raise NonCanonicalRational(f"not in lowest terms: {text!r}")
    return value


def _clog2_plus_one(x: int) -> int:
    # ceil(log2(x + 1)) for x >= 0, exact: equals bit_length(x)
    return x.bit_length()


def size(r) -> int:
    """Binary encoding size 1 + ceil(log2(|p|+1)) + ceil(log2(|q|+1))."""
    r = to_fraction(r)
    return 1 + _clog2_plus_one(abs(r.numerator)) + _clog2_plus_one(r.denominator)


def vector_size(values: Iterable) -> int:
    return sum(size(v) for v in values)


def max_entry_size(*blocks: Iterable) -> int:
    """Largest :func:`size` over all entries of the given vectors/matrices."""
    best = 0
    for block in blocks:
        for item in block:
            if isinstance(item, (list, tuple)):
                for v in item:
                    best = max(best, size(v))
            else:
                best = max(best, size(item))
    return best


def continued_fraction(alpha) -> list[int]:
    """Partial quotients of a rational number."""
    alpha = to_fraction(alpha)
    p, q = alpha.numerator, alpha.denominator
    terms = []
    while q:
        a = p // q
        terms.append(a)
        p, q = q, p - a * q
    return terms


def convergents(alpha) -> list[Fraction]:
    h_prev, h = 1, 0
    k_prev, k = 0, 1
    out = []
    for a in continued_fraction(alpha):
        h_prev, h = a * h_prev + h, h_prev
        k_prev, k = a * k_prev + k, k_prev
        out.append(Fraction(h_prev, k_prev))
    return out


def cf_round(alpha, M: int) -> Optional[Fraction]:
    """The unique p/q with 1 <= q <= M and |alpha - p/q| < 1/(2 M^2), or None.

    Any such fraction is a convergent of alpha (Legendre), and convergent
    errors shrink monotonically, so only the last convergent with q <= M
    has to be tested.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    alpha = to_fraction(alpha)
    best = None
    h_prev, h = 1, 0
    k_prev, k = 0, 1
    p, q = alpha.numerator, alpha.denominator
    while q:
        a = p // q
        p, q = q, p - a * q
        h_next = a * h_prev + h
        k_next = a * k_prev + k
        if k_next > M:
            break
        h, h_prev = h_prev, h_next
        k, k_prev = k_prev, k_next
        best = Fraction(h_prev, k_prev)
    if best is None:
        return None
    if abs(alpha - best) * 2 * M * M < 1:
        return best
    return None


def cf_round_bruteforce(alpha, M: int) -> Optional[Fraction]:
    """Reference search over every denominator q <= M (tests only)."""
    alpha = to_fraction(alpha)
    bound = Fraction(1, 2 * M * M)
    for q in range(1, M + 1):
        p = floor(alpha * q)
        for cand in (Fraction(p, q), Fraction(p + 1, q)):
            if abs(alpha - cand) < bound:
                return cand
    return None


def dot(a: Sequence, b: Sequence):
    total = 0
    for x, y in zip(a, b):
        if x and y:
            total += x * y
    return total


def format_decimal(r, digits: int = 12) -> str:
    """Fixed-point rendering rounded half-to-even at ``digits`` places (display only)."""
    r = to_fraction(r)
    scaled = round(r * 10**digits)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10**digits)
    if digits == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{digits}d}"
