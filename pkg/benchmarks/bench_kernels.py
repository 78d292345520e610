"""Compare the compiled kernels with the pure-Python fallback.

Times the individual QR kernels and full solves on each backend and
prints one line per case with the compiled/python speedup::

    python benchmarks/bench_kernels.py [--reps 5] [--json out.json]
"""
import argparse
import copy
import json
import time

import numpy as np

from lhdm import _backend
from lhdm.bench import InstanceSpec, generate_instance
from lhdm.qr import QRWorkspace
from lhdm.recovery import positivity_trick_solve
from lhdm.solvers import SolverConfig, lh_solve, lhdm_solve


def best_of(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def append_case(backend, m=400, n=800, block=32):
    A = np.random.default_rng(0).standard_normal((m, n))

    def run():
        ws = QRWorkspace(A, np.ones(m), backend=backend)
        for start in range(0, 256, block):
            ws.append(range(start, start + block))
    return run


def downdate_case(backend, m=400, n=800, k=200):
    A = np.random.default_rng(1).standard_normal((m, n))
    base = QRWorkspace(A, np.ones(m), backend=backend)
    base.append(range(k))
    remove = list(range(0, k, 7))

    def run():
        # modules cannot be deep-copied, so share the kernel module
        copy.deepcopy(base, {id(base.kernels): base.kernels}).remove(remove)
    return run


def solve_case(backend, solver, spec):
    inst = generate_instance(spec)
    cfg = SolverConfig(backend=backend)
    if spec.sign_mode == "signed":
        method = "lh" if solver is lh_solve else "lhdm"
        return lambda: positivity_trick_solve(inst.A, inst.b, cfg, method=method)
    return lambda: solver(inst.A, inst.b, cfg)


CASES = {
    "append 8 blocks of 32 (400x800)": lambda be: append_case(be),
    "remove 29 of 200 columns (400x800)": lambda be: downdate_case(be),
    "lh nonneg 400x1000, 50% dense": lambda be: solve_case(
        be, lh_solve, InstanceSpec(400, 1000, 0.5, sign_mode="nonnegative", seed=1)),
    "lhdm nonneg 400x1000, 50% dense": lambda be: solve_case(
        be, lhdm_solve, InstanceSpec(400, 1000, 0.5, sign_mode="nonnegative", seed=1)),
    "lhdm signed 150x300, s=60": lambda be: solve_case(
        be, lhdm_solve, InstanceSpec(150, 300, 60, seed=2)),
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=5)
    parser.add_argument("--json", default=None, help="also write results to this file")
    args = parser.parse_args(argv)
    backends = _backend.available()
    rows = []
    for name, make in CASES.items():
        times = {be: best_of(make(be), args.reps) for be in backends}
        row = {"case": name, **{f"{be}_s": t for be, t in times.items()}}
        if "compiled" in times:
            row["speedup"] = times["python"] / times["compiled"]
        rows.append(row)
        cells = "  ".join(f"{be} {t * 1e3:9.2f} ms" for be, t in times.items())
        extra = f"  speedup {row['speedup']:.2f}x" if "speedup" in row else ""
        print(f"{name:40s} {cells}{extra}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
