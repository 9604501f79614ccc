"""One-sided derivatives of psi and the bisection local search."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from ..exact_arith import cf_round, size
from ..model_io import BlpSingle
from .standard import PsiEvaluator, StandardBlp, compute_bounds, integer_row_norm, to_standard_form

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class Slope:
    value: Fraction


@dataclass(frozen=True)
class Boundary:
    pass


BOUNDARY = Boundary()
Derivative = Union[Slope, Boundary]


def breakpoint_size_bound(std: StandardBlp) -> int:
    """Upper bound on size() of every breakpoint of psi, including l and u.

    A breakpoint is the x2 entry of a basic solution of the lifted system
    over (z1, x2), so by Cramer's rule it is a ratio of two minors of the
    row-integerized matrix [A11 | A12 | b1].  Hadamard's inequality bounds
    each minor by H, the product of the rows' l1 norms, hence
    size <= 1 + 2 * bitlen(H).
    """
    H = 1
    for row, a12, rhs in zip(std.A11, std.A12, std.b1):
        H *= max(1, integer_row_norm(tuple(row) + (a12, rhs)))
    for a, r, _ in std.x2_rows:
        H *= max(1, integer_row_norm((a, r)))
    return 1 + 2 * H.bit_length()


def _psi(ev, x2):
    return ev(x2)


def one_sided_derivative(
    std_or_ev: Union[StandardBlp, PsiEvaluator], x2, side: str, sbound: int
) -> Optional[Derivative]:
    """Slope of psi just left or right of ``x2``.

    When size(x2) <= s the step 2^(-3s) cannot jump over a breakpoint.
    Otherwise x2 is not a breakpoint and at most one rational of
    denominator <= 2^s lies within 2^(-2s-1) of it; continued fractions
    find that point and the secant is taken from whichever end is safe.
    Returns ``BOUNDARY`` at l (left) or u (right) and None outside [l, u].
    """
    ev = std_or_ev if isinstance(std_or_ev, PsiEvaluator) else PsiEvaluator(std_or_ev)
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    x2 = Fraction(x2)
    b = ev.bounds
    if b is None or not b.lo <= x2 <= b.hi:
        return None
    if side == LEFT and x2 == b.lo:
        return BOUNDARY
    if side == RIGHT and x2 == b.hi:
        return BOUNDARY
    sign = -1 if side == LEFT else 1
    s = sbound
    if size(x2) <= s:
        other = x2 + sign * Fraction(1, 2 ** (3 * s))
    else:
        eps = Fraction(1, 2 ** (2 * s + 1))
        near = cf_round(x2, 2**s)
        if near is not None and (near - x2) * sign > 0:
            other = near
        else:
            other = x2 + sign * eps
    return Slope((_psi(ev, other) - _psi(ev, x2)) / (other - x2))


@dataclass(frozen=True)
class LocalOpt:
    x2: Fraction
    x1: tuple
    z1: tuple
    value: Fraction
    left: Optional[Derivative]
    right: Optional[Derivative]
    iterations: int
    sbound: int

    @property
    def certified(self) -> bool:
        left_ok = isinstance(self.left, Boundary) or (isinstance(self.left, Slope) and self.left.value <= 0)
        right_ok = isinstance(self.right, Boundary) or (isinstance(self.right, Slope) and self.right.value >= 0)
        return left_ok and right_ok


class Infeasible:
    """The lower level is infeasible for every x2 in [0, 1]."""

    def __repr__(self) -> str:
        return "Infeasible"


INFEASIBLE = Infeasible()


def _certify(ev, x2, s, iterations) -> LocalOpt:
    left = one_sided_derivative(ev, x2, LEFT, s)
    right = one_sided_derivative(ev, x2, RIGHT, s)
    z1 = ev.z1(x2)
    return LocalOpt(x2, ev.std.x1_from_z1(z1), z1, ev(x2), left, right, iterations, s)


def local_search(b: Union[BlpSingle, StandardBlp], sbound: Optional[int] = None):
    """Bisection on the signs of one-sided derivatives of psi over [l, u].

    Invariant while bisecting: the right derivative at ``lo`` is negative
    and the left derivative at ``hi`` is positive, so a local minimum lies
    strictly inside.  A midpoint with left <= 0 <= right is returned at
    once.  Otherwise the half whose far end still slopes the right way is
    kept.
    """
    std = b if isinstance(b, StandardBlp) else to_standard_form(b)
    ev = PsiEvaluator(std)
    if ev.bounds is None:
        return INFEASIBLE
    s = breakpoint_size_bound(std) if sbound is None else sbound
    l, u = ev.bounds.lo, ev.bounds.hi
    if l == u:
        return _certify(ev, l, s, 0)
    right_at_l = one_sided_derivative(ev, l, RIGHT, s)
    if right_at_l.value >= 0:
        return _certify(ev, l, s, 0)
    left_at_u = one_sided_derivative(ev, u, LEFT, s)
    if left_at_u.value <= 0:
        return _certify(ev, u, s, 0)
    lo, hi = l, u
    stop = Fraction(1, 2 ** (2 * s + 1))
    iterations = 0
    while hi - lo > stop:
        iterations += 1
        mid = (lo + hi) / 2
        left = one_sided_derivative(ev, mid, LEFT, s).value
        if left > 0:
            hi = mid
            continue
        right = one_sided_derivative(ev, mid, RIGHT, s).value
        if right >= 0:
            return _certify(ev, mid, s, iterations)
        lo = mid
    found = cf_round((lo + hi) / 2, 2**s)
    if found is None or not lo <= found <= hi:  # pragma: no cover - excluded by the size bound
        raise RuntimeError("no small-denominator point in the final bisection interval")
    return _certify(ev, found, s, iterations)
