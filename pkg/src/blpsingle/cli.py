"""Command-line front end (``blpsingle``).

Exit codes: 0 success, 1 infeasible or failed verification, 2 usage or
parse error, 3 scale guard tripped.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Optional, Sequence

from .exact_arith import format_decimal, format_rational, parse_rational
from .model_io import FormatError, parse_dimacs, parse_ilp, parse_instance, serialize_instance
from .reductions import build_sat_blp, ilp_to_blp
from .solvers import (
    INFEASIBLE,
    Boundary,
    check_bilevel_feasible,
    global_solve_candidates,
    global_solve_omega,
    local_search,
    psi_profile,
    single_to_general,
)
from .tent_map import (
    CODECS,
    F_U_DEVIATION,
    Binary,
    decode_theta,
    emit_tentmap_table,
    solve_lower_analytic,
    tentmap_csv,
    tentmap_svg,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_TOO_LARGE = 3


class UsageError(Exception):
    pass


def _rat(text: str) -> Fraction:
    try:
        return parse_rational(text, strict=False)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


class Printer:
    def __init__(self, out, decimal: bool):
        self.out = out
        self.decimal = decimal

    def scalar(self, key: str, value) -> None:
        self.out.write(f"{key}: {format_rational(value)}\n")
        if self.decimal:
            self.out.write(f"{key}_decimal: {format_decimal(value)}\n")

    def vector(self, key: str, values) -> None:
        self.out.write(f"{key}: {' '.join(format_rational(v) for v in values)}\n")
        if self.decimal:
            self.out.write(f"{key}_decimal: {' '.join(format_decimal(v) for v in values)}\n")

    def line(self, text: str) -> None:
        self.out.write(text + "\n")


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _write(path: str, data) -> None:
    if isinstance(data, str):
        data = data.encode()
    Path(path).write_bytes(data)


def _load_instance(path: str):
    return parse_instance(_read(path))


def _derivative_text(d) -> str:
    if d is None:
        return "none"
    if isinstance(d, Boundary):
        return "boundary"
    return f"slope {format_rational(d.value)}"


# -- subcommands --------------------------------------------------------------------


def cmd_compile(args, pr: Printer) -> int:
    if args.kind == "sat":
        art = build_sat_blp(parse_dimacs(_read(args.source)), m_policy=args.m_policy)
        inst = art.instance
        if args.verbose and not art.certified:
            sys.stderr.write("note: penalty M is below the computed threshold (recorded in meta)\n")
    else:
        inst = ilp_to_blp(parse_ilp(_read(args.source))).instance
    _write(args.output, serialize_instance(inst))
    pr.line(f"wrote {args.output}: n={inst.n} m={inst.m} provenance={inst.meta.get('provenance')}")
    return EXIT_OK


def cmd_solve(args, pr: Printer) -> int:
    inst = _load_instance(args.instance)
    if args.mode == "local":
        res = local_search(inst)
        if res is INFEASIBLE:
            pr.line("status: infeasible")
            return EXIT_NEGATIVE
        pr.line("status: local-optimum")
        pr.scalar("x2", res.x2)
        pr.scalar("value", res.value)
        pr.line(f"left: {_derivative_text(res.left)}")
        pr.line(f"right: {_derivative_text(res.right)}")
        pr.line(f"iterations: {res.iterations}")
        pr.line(f"sbound: {res.sbound}")
        pr.vector("x1", res.x1)
        return EXIT_OK
    method = args.method
    if method == "candidates":
        try:
            res = global_solve_candidates(inst, jobs=args.jobs)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if res is None:
            pr.line("status: infeasible")
            return EXIT_NEGATIVE
        value, x2 = res
    elif method == "sweep":
        prof = psi_profile(inst)
        if prof is None:
            pr.line("status: infeasible")
            return EXIT_NEGATIVE
        value, x2 = prof.minimum()
    else:
        res = global_solve_omega(single_to_general(inst), cap=args.cap, jobs=args.jobs)
        if res.status == "too_large":
            pr.line(f"status: too-large (m1 = {inst.m + 2 * inst.n} > cap = {args.cap})")
            return EXIT_TOO_LARGE
        if res.status != "solved":
            pr.line(f"status: {res.status}")
            return EXIT_NEGATIVE
        value, x2 = res.value, res.x2[0]
    pr.line("status: optimal")
    pr.scalar("value", value)
    pr.scalar("x2", x2)
    return EXIT_OK


def cmd_lower_eval(args, pr: Printer) -> int:
    if args.verbose:
        sys.stderr.write(f"note: {F_U_DEVIATION}\n")
    sol = solve_lower_analytic(args.n, args.theta)
    for name in ("z", "f", "s", "t", "u"):
        pr.vector(name, getattr(sol, name))
    return EXIT_OK


def cmd_decode(args, pr: Printer) -> int:
    res = decode_theta(args.theta, args.n, args.codec)
    if isinstance(res, Binary):
        pr.line("mu: " + " ".join(str(v) for v in res.mu))
        if res.z_top is not None:
            pr.line(f"z_top: {res.z_top}")
        return EXIT_OK
    pr.line("non-binary")
    pr.vector("z", res.z)
    return EXIT_NEGATIVE


def cmd_psi(args, pr: Printer) -> int:
    prof = psi_profile(_load_instance(args.instance))
    if prof is None:
        pr.line("status: infeasible")
        return EXIT_NEGATIVE
    text = prof.to_csv()
    if args.csv:
        _write(args.csv, text)
        pr.line(f"wrote {args.csv}: {len(prof.breakpoints)} breakpoints")
    else:
        pr.out.write(text)
    return EXIT_OK


def cmd_plot(args, pr: Printer) -> int:
    rows = emit_tentmap_table(args.n, args.denominator)
    if args.svg:
        _write(args.svg, tentmap_svg(rows))
    if args.csv:
        _write(args.csv, tentmap_csv(rows, decimal=pr.decimal))
    if not args.svg and not args.csv:
        pr.out.write(tentmap_csv(rows, decimal=pr.decimal))
    return EXIT_OK


def _truth_table_sat(cnf) -> bool:
    return any(cnf.satisfied_by(mu) for mu in product((0, 1), repeat=cnf.nvars))


def cmd_verify(args, pr: Printer) -> int:
    if args.kind == "sat":
        cnf = parse_dimacs(_read(args.cnf))
        inst = _load_instance(args.instance)
        fresh = build_sat_blp(cnf, m_policy=inst.meta.get("M_policy", "formula")).instance
        if fresh != inst:
            pr.line("verify: instance does not match the recompiled formula")
            return EXIT_NEGATIVE
        value, theta = global_solve_candidates(inst, jobs=args.jobs)
        sat = _truth_table_sat(cnf)
        ok = value == (-1 if sat else 0)
        pr.scalar("value", value)
        pr.scalar("theta", theta)
        pr.line(f"satisfiable: {'yes' if sat else 'no'}")
        pr.line(f"verify: {'ok' if ok else 'MISMATCH'}")
        return EXIT_OK if ok else EXIT_NEGATIVE
    inst = _load_instance(args.instance)
    x1 = _read_vector(args.x1)
    if len(x1) != inst.n:
        raise UsageError(f"x1 has {len(x1)} entries, instance has n = {inst.n}")
    ok = check_bilevel_feasible(inst, args.x2, x1)
    pr.line(f"bilevel-feasible: {'yes' if ok else 'no'}")
    return EXIT_OK if ok else EXIT_NEGATIVE


def _read_vector(path: str) -> list:
    text = _read(path).decode("utf-8").strip()
    try:
        if text.startswith("["):
            items = json.loads(text)
        else:
            items = text.replace(",", " ").split()
        return [parse_rational(str(v), strict=False) for v in items]
    except ValueError as exc:
        raise UsageError(f"bad vector file {path}: {exc}") from exc


# -- parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--decimal", action="store_true", help="add 12-digit decimal renderings")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for enumerations")

    p = argparse.ArgumentParser(prog="blpsingle", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", parents=[common], help="build an instance file")
    c.add_argument("kind", choices=("sat", "ilp"))
    c.add_argument("source")
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--m-policy", choices=("formula", "certified"), default="formula")
    c.set_defaults(func=cmd_compile)

    s = sub.add_parser("solve", parents=[common], help="global or local solve")
    s.add_argument("mode", choices=("global", "local"))
    s.add_argument("instance")
    s.add_argument("--method", choices=("candidates", "sweep", "omega"), default="sweep")
    s.add_argument("--cap", type=int, default=14)
    s.set_defaults(func=cmd_solve)

    le = sub.add_parser("lower-eval", parents=[common], help="closed-form lower solution")
    le.add_argument("-n", type=int, required=True)
    le.add_argument("--theta", type=_rat, required=True)
    le.set_defaults(func=cmd_lower_eval)

    d = sub.add_parser("decode", parents=[common], help="theta -> binary vector")
    d.add_argument("--theta", type=_rat, required=True)
    d.add_argument("-n", type=int, required=True)
    d.add_argument("--codec", choices=CODECS, default="lemma4iii")
    d.set_defaults(func=cmd_decode)

    ps = sub.add_parser("psi", parents=[common], help="breakpoint profile of psi")
    ps.add_argument("instance")
    ps.add_argument("--csv")
    ps.set_defaults(func=cmd_psi)

    pl = sub.add_parser("plot", parents=[common], help="figure data")
    pl.add_argument("what", choices=("tentmap",))
    pl.add_argument("-n", type=int, required=True)
    pl.add_argument("-d", "--denominator", type=int, required=True)
    pl.add_argument("--svg")
    pl.add_argument("--csv")
    pl.set_defaults(func=cmd_plot)

    v = sub.add_parser("verify", help="verification commands")
    vsub = v.add_subparsers(dest="kind", required=True)
    vs = vsub.add_parser("sat", parents=[common])
    vs.add_argument("cnf")
    vs.add_argument("instance")
    vp = vsub.add_parser("point", parents=[common])
    vp.add_argument("instance")
    vp.add_argument("--x2", type=_rat, required=True)
    vp.add_argument("--x1", required=True)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    pr = Printer(out or sys.stdout, args.decimal)
    try:
        return args.func(args, pr)
    except (UsageError, FormatError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
