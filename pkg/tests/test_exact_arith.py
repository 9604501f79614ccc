import os
import subprocess
import sys
from fractions import Fraction
from math import ceil, log2

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blpsingle.exact_arith import (
    NonCanonicalRational,
    backend,
    cf_round,
    cf_round_bruteforce,
    continued_fraction,
    convergents,
    format_decimal,
    format_rational,
    parse_rational,
    size,
    vector_size,
)

rationals = st.fractions(max_denominator=10**9).filter(lambda r: abs(r) < 10**12)


@pytest.mark.parametrize("r, expected", [(Fraction(0), 2), (Fraction(3, 2), 5), (Fraction(-5, 3), 6), (Fraction(6), 5)])
def test_size_examples(r, expected):
    assert size(r) == expected


@given(rationals)
def test_size_matches_log_formula(r):
    p, q = abs(r.numerator), r.denominator
    # small magnitudes only, so float log2 is exact enough to serve as a reference
    if p < 2**40 and q < 2**40:
        assert size(r) == 1 + ceil(log2(p + 1)) + ceil(log2(q + 1))


def test_size_of_huge_power_of_two():
    # 2^k needs k + 1 bits: ceil(log2(2^k + 1)) = k + 1
    assert size(Fraction(2**4000)) == 1 + 4001 + 1


def test_vector_size_sums():
    assert vector_size([Fraction(0), Fraction(3, 2)]) == 7


@pytest.mark.parametrize(
    "alpha, M, expected",
    [
        (Fraction(333, 1000), 10, Fraction(1, 3)),
        (Fraction(1, 2), 5, Fraction(1, 2)),
        (Fraction(141, 100), 3, None),
        (Fraction(-7, 3), 3, Fraction(-7, 3)),
        (Fraction(5), 1, Fraction(5)),
    ],
)
def test_cf_round_examples(alpha, M, expected):
    assert cf_round(alpha, M) == expected


def test_cf_round_strict_tie_returns_empty():
    # exactly 1/(2 M^2) away from 0/1 and no closer candidate
    assert cf_round(Fraction(1, 8), 2) is None
    assert cf_round_bruteforce(Fraction(1, 8), 2) is None


def test_cf_round_rejects_bad_bound():
    with pytest.raises(ValueError):
        cf_round(Fraction(1, 2), 0)


@given(rationals, st.integers(min_value=1, max_value=40))
def test_cf_round_agrees_with_bruteforce(alpha, M):
    assert cf_round(alpha, M) == cf_round_bruteforce(alpha, M)


@given(rationals)
def test_last_convergent_is_the_number(alpha):
    cs = convergents(alpha)
    assert cs[-1] == alpha
    assert len(cs) == len(continued_fraction(alpha))


@given(rationals)
def test_format_parse_round_trip(r):
    assert parse_rational(format_rational(r)) == r


@pytest.mark.parametrize("text", ["2/4", "-0", "1/1", "03", "1/-2", "0/5", "1.5", ""])
def test_parse_rejects_noncanonical(text):
    with pytest.raises(ValueError):
        parse_rational(text)


def test_parse_noncanonical_is_specific_error():
    with pytest.raises(NonCanonicalRational):
        parse_rational("2/4")


def test_parse_lenient_mode_reduces():
    assert parse_rational("2/4", strict=False) == Fraction(1, 2)


def test_format_examples():
    assert format_rational(Fraction(0)) == "0"
    assert format_rational(Fraction(-3, 6)) == "-1/2"
    assert format_rational(7) == "7"


def test_format_decimal():
    assert format_decimal(Fraction(1, 3)) == "0.333333333333"
    assert format_decimal(Fraction(-2, 3), 3) == "-0.667"
    assert format_decimal(Fraction(5, 2), 0) == "2"


@pytest.mark.parametrize("flag, expected", [("fraction", "fraction"), ("", "mpq")])
def test_backend_selected_by_environment(flag, expected):
    env = dict(os.environ, BLPSINGLE_ARITH=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from blpsingle import backend; print(backend())"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == expected


def test_backend_default():
    assert backend() in ("mpq", "fraction")
