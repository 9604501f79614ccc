"""Acceptance properties, all checked with exact rational equality.

Each test name starts with ``test_criterion_<k>_``; conftest prints one
PASS/FAIL line per k at the end of the run.
"""

import random
import time
from fractions import Fraction
from itertools import product
from math import gcd

import pytest

from _gen import (
    canonical_formulas,
    feasible_blp_single,
    ilp_brute,
    knapsack_grid,
    random_blp_single,
    random_cnf,
    random_feasible_ilp,
    random_general,
    truth_table_sat,
)
from blpsingle.exact_arith import cf_round, cf_round_bruteforce
from blpsingle.lex_simplex import OPTIMAL, solve_lex, solve_lex_sequential
from blpsingle.reductions import apply_penalty, build_sat_blp, ilp_to_blp, penalty_threshold
from blpsingle.solvers import (
    INFEASIBLE,
    Boundary,
    Slope,
    check_bilevel_feasible,
    decode_lower_point,
    global_solve_candidates,
    global_solve_omega,
    local_search,
    psi_profile,
)
from blpsingle.tent_map import (
    CODEC_ILP,
    CODEC_SAT,
    Binary,
    decode_theta,
    emit_tentmap_table,
    encode_mu,
    lower_lex_lp,
    lower_solution_from_values,
    solve_lower_analytic,
)

# -- 1: satisfiable iff the optimum is -1 -------------------------------------------


def test_criterion_1_sat_value_dichotomy():
    start = time.perf_counter()
    formulas = list(canonical_formulas(3, 4))
    rng = random.Random(20261018)
    formulas += [random_cnf(rng, 6, 12) for _ in range(200)]
    wrong = []
    for cnf in formulas:
        value, _ = global_solve_candidates(build_sat_blp(cnf))
        expected = -1 if truth_table_sat(cnf) else 0
        if value != expected:
            wrong.append((cnf, value, expected))
    elapsed = time.perf_counter() - start
    assert not wrong, wrong[:3]
    assert elapsed < 120, f"{elapsed:.1f}s"


# -- 2: closed-form lower solution vs. simplex ----------------------------------------


def _random_thetas(rng, count):
    out = []
    for _ in range(count):
        q = rng.randint(1, 3**8)
        out.append(Fraction(rng.randint(0, q), q))
    return out


def test_criterion_2_lower_level_cross_oracle():
    start = time.perf_counter()
    rng = random.Random(7)
    thetas = _random_thetas(rng, 200)
    # keep the tent-map corners in every run
    thetas[:6] = [Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1), Fraction(1, 3**8)]
    mismatches = []
    for k, theta in enumerate(thetas):
        n = 1 + k % 4
        L = n + 1
        expected = solve_lower_analytic(n, theta)
        for eta in (Fraction(1), Fraction(1, 2), Fraction(1, 7)):
            res = solve_lex(lower_lex_lp(L, theta, weighted=True, eta=eta))
            got = lower_solution_from_values(L, res.solution.values) if res.status == OPTIMAL else None
            if got != expected:
                mismatches.append(("weighted", theta, n, eta))
        lex = lower_lex_lp(L, theta)
        for solver, tag in ((solve_lex_sequential, "sequential"), (solve_lex, "lex")):
            res = solver(lex)
            got = lower_solution_from_values(L, res.solution.values) if res.status == OPTIMAL else None
            if got != expected:
                mismatches.append((tag, theta, n))
    assert not mismatches, mismatches[:5]
    assert time.perf_counter() - start < 120


# -- 3: golden basic solution at n = 1 ------------------------------------------------


@pytest.mark.parametrize("theta", [Fraction(0), Fraction(1, 18), Fraction(1, 9)])
def test_criterion_3_golden_basis(theta):
    res = solve_lex(lower_lex_lp(2, theta, weighted=True, eta=1))
    assert res.status == OPTIMAL
    sol = lower_solution_from_values(2, res.solution.values)
    half = Fraction(1, 2)
    assert sol.f == (half, half)
    assert sol.s == (0, 0)
    assert sol.u == (3 * theta, theta)
    assert sol.z == (0, 0)
    assert sol.t == (0, 0)


# -- 4: penalty reformulation -------------------------------------------------------------


def test_criterion_4_penalty_equivalence():
    rng = random.Random(4)
    pairs = 0
    draws = 0
    while pairs < 100:
        draws += 1
        assert draws < 5000, "too few instances with attained optima"
        g = random_general(rng)
        plain = global_solve_omega(g)
        if plain.status != "solved":
            continue
        pen = apply_penalty(g, penalty_threshold(g))
        res = global_solve_omega(pen, probe=g.n1)
        if res.status != "solved":
            continue
        pairs += 1
        assert res.value == plain.value, (g, plain.value, res.value)
        assert res.probe_max == 0, (g, res.probe_max)


# -- 5: 0-1 ILP round trip -----------------------------------------------------------------


def _optimal_thetas(profile):
    """Every breakpoint where psi is minimal plus the midpoint of every flat
    minimal segment."""
    best = min(profile.values)
    bps, vals = profile.breakpoints, profile.values
    out = [bp for bp, v in zip(bps, vals) if v == best]
    for k in range(len(profile.slopes)):
        if vals[k] == best and vals[k + 1] == best:
            out.append((bps[k] + bps[k + 1]) / 2)
    return out


def _decodes_to_optimum(theta, ilp, optima):
    d = decode_theta(theta, ilp.r, CODEC_ILP)
    return isinstance(d, Binary) and d.mu in optima


def _check_ilp(ilp, sweep):
    best, optima = ilp_brute(ilp)
    art = ilp_to_blp(ilp)
    value, theta = global_solve_candidates(art)
    assert value == best, (ilp, value, best)
    assert _decodes_to_optimum(theta, ilp, optima), (ilp, theta)
    if sweep:
        prof = psi_profile(art.instance)
        assert min(prof.values) == best
        for t in _optimal_thetas(prof):
            assert _decodes_to_optimum(t, ilp, optima), (ilp, t)


def test_criterion_5_knapsack_grid():
    for ilp in knapsack_grid(4):
        _check_ilp(ilp, sweep=ilp.r <= 2)


def test_criterion_5_random_ilps():
    rng = random.Random(55)
    for _ in range(100):
        ilp = random_feasible_ilp(rng, 5)
        _check_ilp(ilp, sweep=ilp.r <= 2)


# -- 6: local search ------------------------------------------------------------------------


def _profile_slopes(prof, x2):
    """(left, right) slopes of the profile at x2; None at the matching end."""
    bps = prof.breakpoints
    left = right = None
    for k, slope in enumerate(prof.slopes):
        if bps[k] < x2 <= bps[k + 1]:
            left = slope
        if bps[k] <= x2 < bps[k + 1]:
            right = slope
    return left, right


def _check_local(inst):
    res = local_search(inst)
    prof = psi_profile(inst)
    if res is INFEASIBLE:
        assert prof is None
        return None
    assert res.iterations <= 2 * res.sbound + 2, (res.iterations, res.sbound)
    assert check_bilevel_feasible(inst, res.x2, res.x1)
    assert res.value == prof.value_at(res.x2)
    left, right = _profile_slopes(prof, res.x2)
    if left is None:
        assert isinstance(res.left, Boundary) or prof.lo == prof.hi
    else:
        assert isinstance(res.left, Slope) and res.left.value == left and left <= 0
    if right is None:
        assert isinstance(res.right, Boundary) or prof.lo == prof.hi
    else:
        assert isinstance(res.right, Slope) and res.right.value == right and right >= 0
    return res


def test_criterion_6_local_search_random():
    rng = random.Random(66)
    bisected = 0
    for _ in range(100):
        res = _check_local(feasible_blp_single(rng, 6, 10))
        bisected += res.iterations > 0
    assert bisected >= 5
    # unfiltered draws are mostly infeasible; the two oracles must agree on that
    for _ in range(100):
        _check_local(random_blp_single(rng, 6, 10))


def test_criterion_6_local_search_reductions():
    for cnf in canonical_formulas(3, 4):
        if cnf.nvars <= 2:
            _check_local(build_sat_blp(cnf).instance)
    for ilp in knapsack_grid(2):
        _check_local(ilp_to_blp(ilp).instance)


# -- 7: continued-fraction rounding -------------------------------------------------------


def test_criterion_7_cf_round_exhaustive():
    rng = random.Random(77)
    bound = Fraction(1, 5000)
    for q in range(1, 51):
        for p in range(0, q + 1):
            if gcd(p, q) != 1:
                continue
            target = Fraction(p, q)
            assert cf_round(target, 50) == target
            for _ in range(200):
                delta = bound * Fraction(rng.randrange(-(10**9) + 1, 10**9), 10**9)
                assert cf_round(target + delta, 50) == target, (target, delta)


def test_criterion_7_cf_round_soundness():
    rng = random.Random(78)
    for _ in range(10**4):
        M = rng.randint(1, 60)
        q = rng.randint(1, 10**6)
        alpha = Fraction(rng.randint(-3 * q, 3 * q), q)
        got = cf_round(alpha, M)
        assert got == cf_round_bruteforce(alpha, M), (alpha, M)
        if got is not None:
            assert 1 <= got.denominator <= M
            assert abs(alpha - got) < Fraction(1, 2 * M * M)


# -- 8: tent-map figure data ------------------------------------------------------------


def _z_of(v):
    # piecewise-linear clamp of 3v - 1 into [0, 1]
    return min(Fraction(1), max(Fraction(0), 3 * v - 1))


def test_criterion_8_tentmap_table():
    rows = emit_tentmap_table(2, 81)
    assert [r.theta for r in rows] == [Fraction(k, 81) for k in range(82)]
    for row in rows:
        u = [row.theta]
        for _ in range(2):
            v = u[0]
            u.insert(0, 3 * v - 2 * _z_of(v))
        assert row.u == tuple(u)
        assert row.z == tuple(_z_of(v) for v in u)
    z1 = [r.z[0] for r in rows]
    kinks = {rows[k].theta for k in range(1, 81) if z1[k - 1] - 2 * z1[k] + z1[k + 1] != 0}
    # z1 bends at every k/27 except the multiples of 1/9, where it is flat on both sides
    assert kinks == {Fraction(k, 27) for k in range(1, 27) if k % 3}


# -- 9: witness points of the SAT reduction ---------------------------------------------


def test_criterion_9_witness_feasibility():
    bad = []
    for cnf in canonical_formulas(3, 4):
        inst = build_sat_blp(cnf).instance
        for mu in product((0, 1), repeat=cnf.nvars):
            theta = encode_mu(mu, CODEC_SAT)
            x1 = decode_lower_point(inst, theta)
            if not check_bilevel_feasible(inst, theta, x1):
                bad.append((cnf, mu))
    assert not bad, bad[:3]
