"""Bilevel solvers for single-upper-variable instances."""

from .global_ import (
    ContinuityError,
    OmegaResult,
    PsiProfile,
    candidate_thetas,
    check_bilevel_feasible,
    decode_lower_point,
    global_solve_candidates,
    global_solve_omega,
    global_solve_sweep,
    lower_value,
    psi_profile,
    single_to_general,
)
from .local import (
    BOUNDARY,
    INFEASIBLE,
    LEFT,
    RIGHT,
    Boundary,
    LocalOpt,
    Slope,
    breakpoint_size_bound,
    local_search,
    one_sided_derivative,
)
from .standard import (
    Bounds,
    LowerInfeasible,
    PsiEvaluator,
    StandardBlp,
    compute_bounds,
    eval_psi,
    to_standard_form,
)

__all__ = [
    "BOUNDARY",
    "Boundary",
    "Bounds",
    "ContinuityError",
    "INFEASIBLE",
    "LEFT",
    "LocalOpt",
    "LowerInfeasible",
    "OmegaResult",
    "PsiEvaluator",
    "PsiProfile",
    "RIGHT",
    "Slope",
    "StandardBlp",
    "breakpoint_size_bound",
    "candidate_thetas",
    "check_bilevel_feasible",
    "compute_bounds",
    "decode_lower_point",
    "eval_psi",
    "global_solve_candidates",
    "global_solve_omega",
    "global_solve_sweep",
    "local_search",
    "lower_value",
    "one_sided_derivative",
    "psi_profile",
    "single_to_general",
    "to_standard_form",
]
