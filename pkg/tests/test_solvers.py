import random
from fractions import Fraction

import pytest

from _gen import canonical_formulas, feasible_blp_single, random_blp_single
from blpsingle.exact_arith import size
from blpsingle.lex_simplex import OPTIMAL, solve_lex_sequential
from blpsingle.model_io import BlpGeneral, BlpSingle, LexLp
from blpsingle.reductions import build_sat_blp
from blpsingle.solvers import (
    BOUNDARY,
    INFEASIBLE,
    LEFT,
    RIGHT,
    Bounds,
    LowerInfeasible,
    PsiEvaluator,
    Slope,
    breakpoint_size_bound,
    check_bilevel_feasible,
    compute_bounds,
    eval_psi,
    global_solve_candidates,
    global_solve_omega,
    global_solve_sweep,
    local_search,
    lower_value,
    one_sided_derivative,
    psi_profile,
    single_to_general,
    to_standard_form,
)

F = Fraction
# lower: min x1 s.t. x1 + x2 >= 1; upper cost x1
TOY = BlpSingle(1, 1, [1], [1], 0, [[1]], [1], [1])
# lower: min x1 s.t. x1 >= 1 - 2 x2, x1 >= 2 x2 - 1; upper cost x1
VEE = BlpSingle(1, 2, [1], [1], 0, [[1], [1]], [2, -2], [1, -1])


def _psi_oracle(b: BlpSingle, x2):
    """Optimistic psi by value pinning on the raw inequality system."""
    n, m = b.n, b.m
    nv = n + m
    A = []
    for k in range(m):
        row = list(b.A11[k]) + [F(0)] * m
        row[n + k] = F(-1)
        A.append(row)
    rhs = [b.b1[k] - b.A12[k] * x2 for k in range(m)]
    lp = LexLp(nv, A, rhs, [0] * nv, [1] * n + [None] * m, [list(b.c11) + [0] * m, list(b.c21) + [0] * m])
    res = solve_lex_sequential(lp)
    if res.status != OPTIMAL:
        return None
    return res.solution.objective_values[1] + b.c22 * x2


def test_standard_form_toy():
    std = to_standard_form(TOY)
    # z1 = (x1, w, surplus)
    assert std.nz == 3 and std.m == 2
    assert std.surplus_of == {0: 2}


def test_standard_form_drops_duplicate_rows():
    dup = BlpSingle(1, 2, [1], [1], 0, [[1], [1]], [1, 1], [1, 1])
    std = to_standard_form(dup)
    assert std.m == 2 and std.nz == 3


def test_standard_form_merges_opposite_rows():
    eq = BlpSingle(2, 2, [1, 0], [0, 1], 0, [[1, 1], [-1, -1]], [0, 0], [1, -1])
    std = to_standard_form(eq)
    assert std.nz == 4  # no surplus for the equality pair
    assert compute_bounds(std) == Bounds(0, 1)


def test_bounds_examples():
    assert compute_bounds(to_standard_form(TOY)) == Bounds(0, 1)
    half = BlpSingle(1, 1, [1], [1], 0, [[0]], [1], [F(1, 2)])
    assert compute_bounds(to_standard_form(half)) == Bounds(F(1, 2), 1)
    empty = BlpSingle(1, 1, [1], [1], 0, [[1]], [1], [3])
    assert compute_bounds(to_standard_form(empty)) is None
    clash = BlpSingle(1, 2, [1], [1], 0, [[1], [-1]], [0, 0], [F(1, 2), F(-1, 4)])
    assert compute_bounds(to_standard_form(clash)) is None


def test_eval_psi_examples():
    assert eval_psi(to_standard_form(TOY), F(1, 4)) == F(3, 4)
    assert eval_psi(to_standard_form(VEE), F(1, 2)) == 0
    half = BlpSingle(1, 1, [1], [1], 0, [[0]], [1], [F(1, 2)])
    with pytest.raises(LowerInfeasible):
        eval_psi(to_standard_form(half), F(1, 4))


def test_eval_psi_on_sat_instance_at_left_end():
    std = to_standard_form(build_sat_blp(canonical_formulas(2, 2)[5]).instance)
    ev = PsiEvaluator(std)
    assert ev.bounds.lo == 0
    assert isinstance(ev(0), Fraction)


def test_psi_matches_pinning_oracle():
    rng = random.Random(21)
    checked = 0
    for _ in range(60):
        b = feasible_blp_single(rng, 4, 6)
        ev = PsiEvaluator(to_standard_form(b))
        lo, hi = ev.bounds.lo, ev.bounds.hi
        for k in range(7):
            x2 = lo + (hi - lo) * F(k, 6)
            assert ev(x2) == _psi_oracle(b, x2)
            checked += 1
    assert checked == 420


def test_evaluator_cache_does_not_change_values():
    rng = random.Random(22)
    b = feasible_blp_single(rng, 5, 8)
    std = to_standard_form(b)
    warm = PsiEvaluator(std)
    pts = [F(k, 37) for k in range(38)]
    pts = [p for p in pts if warm.bounds.lo <= p <= warm.bounds.hi]
    vals = [warm(p) for p in pts]
    assert vals == [PsiEvaluator(std, max_cache=0)(p) for p in pts]
    assert warm.hits > 0


def test_derivative_examples():
    toy = to_standard_form(TOY)
    s = breakpoint_size_bound(toy)
    assert one_sided_derivative(toy, F(1, 2), LEFT, s) == Slope(-1)
    assert one_sided_derivative(toy, F(1, 2), RIGHT, s) == Slope(-1)
    assert one_sided_derivative(toy, 0, LEFT, s) is BOUNDARY
    assert one_sided_derivative(toy, 1, RIGHT, s) is BOUNDARY
    assert one_sided_derivative(toy, 2, RIGHT, s) is None
    vee = to_standard_form(VEE)
    sv = breakpoint_size_bound(vee)
    assert one_sided_derivative(vee, F(1, 2), LEFT, sv) == Slope(-2)
    assert one_sided_derivative(vee, F(1, 2), RIGHT, sv) == Slope(2)
    with pytest.raises(ValueError):
        one_sided_derivative(vee, F(1, 2), "up", sv)


def test_derivative_at_large_size_point():
    # x2 with a huge denominator uses the continued-fraction branch
    vee = to_standard_form(VEE)
    s = breakpoint_size_bound(vee)
    x2 = F(1, 2) - F(1, 2 ** (4 * s))
    assert size(x2) > s
    assert one_sided_derivative(vee, x2, LEFT, s) == Slope(-2)
    assert one_sided_derivative(vee, x2, RIGHT, s) == Slope(-2)


def test_breakpoint_bound_covers_breakpoints():
    rng = random.Random(23)
    for _ in range(60):
        b = feasible_blp_single(rng, 5, 8)
        std = to_standard_form(b)
        s = breakpoint_size_bound(std)
        prof = psi_profile(std)
        assert all(size(bp) <= s for bp in prof.breakpoints)
    toy = to_standard_form(TOY)
    assert max(size(F(0)), size(F(1))) <= breakpoint_size_bound(toy)


def test_local_search_examples():
    res = local_search(TOY)
    assert res.x2 == 1 and res.value == 0
    assert res.right is BOUNDARY and res.left == Slope(-1)
    assert res.certified
    res = local_search(VEE)
    assert res.x2 == F(1, 2) and res.value == 0 and res.certified
    empty = BlpSingle(1, 1, [1], [1], 0, [[1]], [1], [3])
    assert local_search(empty) is INFEASIBLE


def test_profile_examples():
    prof = psi_profile(TOY)
    assert prof.breakpoints == (0, 1) and prof.slopes == (-1,)
    assert global_solve_sweep(TOY) == (0, 1)
    prof = psi_profile(VEE)
    assert prof.breakpoints == (0, F(1, 2), 1) and prof.slopes == (-2, 2)
    assert prof.minimum() == (0, F(1, 2))
    assert prof.to_csv() == "breakpoint,value,slope_right\n0,1,-2\n1/2,0,2\n1,1,\n"
    with pytest.raises(ValueError):
        prof.value_at(2)


def test_profile_of_single_point_interval():
    pinned = BlpSingle(1, 2, [1], [1], 0, [[0], [0]], [1, -1], [F(1, 3), F(-1, 3)])
    prof = psi_profile(pinned)
    assert prof.breakpoints == (F(1, 3),) and prof.slopes == ()


def test_profile_agrees_with_pointwise_psi():
    rng = random.Random(24)
    for _ in range(40):
        b = feasible_blp_single(rng, 4, 6)
        prof = psi_profile(b)
        for k in range(9):
            x2 = prof.lo + (prof.hi - prof.lo) * F(k, 8)
            assert prof.value_at(x2) == _psi_oracle(b, x2)


def test_sweep_matches_omega():
    rng = random.Random(25)
    compared = 0
    for _ in range(80):
        b = random_blp_single(rng, 2, 4)
        sweep = global_solve_sweep(b)
        omega = global_solve_omega(single_to_general(b))
        if sweep is None:
            assert omega.status == "infeasible"
            continue
        assert omega.status == "solved"
        assert omega.value == sweep[0]
        compared += 1
    assert compared >= 10


def test_sweep_matches_candidates_on_small_formulas():
    for cnf in canonical_formulas(2, 2):
        art = build_sat_blp(cnf)
        assert global_solve_sweep(art.instance)[0] == global_solve_candidates(art)[0]


def test_candidates_need_provenance():
    with pytest.raises(ValueError):
        global_solve_candidates(TOY)


def test_omega_without_lower_objective_is_plain_lp():
    g = BlpGeneral(
        c11=[0],
        A11=[[1], [-1]],
        A12=[[1], [0]],
        b1=[F(1, 2), -1],
        c21=[1],
        c22=[1],
        A21=[[0], [0]],
        A22=[[1], [-1]],
        b2=[0, -1],
    )
    res = global_solve_omega(g)
    assert res.status == "solved" and res.value == F(1, 2) and res.patterns == 1


def test_omega_scale_guard():
    g = single_to_general(VEE)
    assert global_solve_omega(g, cap=g.m1 - 1).status == "too_large"
    assert global_solve_omega(g, cap=g.m1).status == "solved"


def test_omega_parallel_matches_serial():
    g = single_to_general(VEE)
    assert global_solve_omega(g, jobs=2) == global_solve_omega(g)


def test_check_bilevel_feasible_examples():
    assert check_bilevel_feasible(TOY, F(1, 4), [F(3, 4)])
    assert not check_bilevel_feasible(TOY, F(1, 4), [1])
    assert not check_bilevel_feasible(TOY, 2, [0])
    assert not check_bilevel_feasible(TOY, F(1, 4), [F(1, 2)])
    with pytest.raises(ValueError):
        check_bilevel_feasible(TOY, 0, [0, 0])


def test_lower_value():
    assert lower_value(VEE, F(1, 4)) == F(1, 2)
    assert lower_value(BlpSingle(1, 1, [1], [1], 0, [[1]], [1], [3]), 0) is None
