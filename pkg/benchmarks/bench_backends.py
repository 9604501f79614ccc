"""Time the simplex kernel under each scalar backend.

Each backend runs in a fresh interpreter because the choice is read from
BLPSINGLE_ARITH.  Usage:  python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
sys.set_int_max_str_digits(0)
from blpsingle import backend
from blpsingle.model_io import Cnf, ZeroOneIlp
from blpsingle.reductions import build_sat_blp, ilp_to_blp
from blpsingle.solvers import global_solve_candidates, local_search, psi_profile

sat = build_sat_blp(Cnf(2, [[1, -2], [-1, 2]])).instance
ilp = ilp_to_blp(ZeroOneIlp(3, [-2, -3, -1], [[-1, -1, -1]], [-2]))
timings = {}
for name, job in (
    ("psi_profile(sat n=2)", lambda: psi_profile(sat)),
    ("local_search(sat n=2)", lambda: local_search(sat)),
    ("candidates(ilp r=3)", lambda: global_solve_candidates(ilp)),
):
    t = time.perf_counter()
    job()
    timings[name] = time.perf_counter() - t
print(json.dumps({"backend": backend(), "timings": timings}))
"""


def run(flag: str) -> dict:
    env = dict(os.environ, BLPSINGLE_ARITH=flag)
    out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    best: dict = {}
    for flag in ("mpq", "fraction"):
        for _ in range(args.repeat):
            res = run(flag)
            slot = best.setdefault(res["backend"], {})
            for k, v in res["timings"].items():
                slot[k] = min(v, slot.get(k, v))
    names = list(next(iter(best.values())))
    width = max(map(len, names))
    print(f"{'workload':<{width}}  " + "  ".join(f"{b:>9}" for b in best))
    for name in names:
        print(f"{name:<{width}}  " + "  ".join(f"{best[b][name]:>8.3f}s" for b in best))


if __name__ == "__main__":
    main()
