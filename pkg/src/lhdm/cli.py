"""Command-line interface: ``lhdm solve | gen | bench | diag``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O failure.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench
from .dense import as_dense, as_vector, load_matrix
from .dm import DMParams
from .errors import LHDMError, MatrixFormatError
from .recovery import diagnose, l1_nnls_solve, omp_solve, positivity_trick_solve
from .solvers import SolverConfig, lh_solve, lhdm_solve

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _index_list(text):
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser():
    p = _Parser(prog="lhdm", description="Active-set NNLS solvers and sparse-recovery tools.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one NNLS / recovery problem")
    s.add_argument("--matrix", required=True, help="CSV or DMAT matrix file")
    s.add_argument("--rhs", required=True, help="CSV or DMAT right-hand side")
    s.add_argument("--method", choices=["lh", "lhdm", "omp", "l1nnls"], default="lhdm")
    s.add_argument("--signed", action="store_true",
                   help="solve for a signed x through the positivity trick")
    s.add_argument("--tau1", type=float, default=DMParams.tau1)
    s.add_argument("--tau2", type=float, default=DMParams.tau2)
    s.add_argument("--delta", type=float, default=DMParams.delta)
    s.add_argument("--kmax", type=int, default=DMParams.k_max)
    s.add_argument("--lambda", dest="lam", type=float, default=1e3)
    s.add_argument("--sign-flip", choices=["on", "off"], default="on")
    s.add_argument("--tol-dual", type=float, default=None)
    s.add_argument("--max-iter", type=int, default=None)
    s.add_argument("--out", default=None, help="output file (stdout when omitted)")
    s.add_argument("--format", choices=["csv", "json"], default="csv")

    g = sub.add_parser("gen", help="generate a dataset directory")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--sparsity", type=float, default=1,
                   help="support size (>= 1) or density fraction (< 1)")
    g.add_argument("--cond-lo", type=float, default=None)
    g.add_argument("--cond-hi", type=float, default=None)
    g.add_argument("--sign", choices=["signed", "nonneg"], default="signed")
    g.add_argument("--erc", action="store_true", help="repair instances until ERC holds")
    g.add_argument("--frame", choices=["gaussian", "incoherent"], default="gaussian")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--family", default="")
    g.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="time solvers on a dataset directory")
    b.add_argument("--dataset", required=True)
    b.add_argument("--solvers", default="lh,lhdm",
                   help="comma-separated names from: " + ", ".join(bench.solver_registry()))
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--out", required=True)
    b.add_argument("--format", choices=["csv", "json"], default=None,
                   help="default: json for .json/.jsonl, csv otherwise")

    d = sub.add_parser("diag", help="coherence and ERC diagnostics")
    d.add_argument("--matrix", required=True)
    d.add_argument("--support", required=True, type=_index_list)
    return p


def _config(args):
    try:
        return SolverConfig(
            dm=DMParams(tau1=args.tau1, tau2=args.tau2, delta=args.delta, k_max=args.kmax),
            dual_tolerance=args.tol_dual, max_outer_iterations=args.max_iter)
    except ValueError as exc:
        raise UsageError(str(exc))


def _cmd_solve(args, out):
    A = as_dense(load_matrix(args.matrix))
    b = as_vector(load_matrix(args.rhs).ravel(), A.m)
    flip = args.sign_flip == "on"
    cfg = _config(args)
    if args.method == "omp":
        res = omp_solve(A, b)
        x, status, iters = res.x_signed, "Converged", res.iterations
    elif args.method == "l1nnls":
        res = l1_nnls_solve(A, b, args.lam, cfg)
        x, status, iters = res.x_signed, res.nnls_report.status.value, res.iterations
    elif args.signed:
        res = positivity_trick_solve(A, b, cfg, method=args.method, sign_flip=flip)
        x, status, iters = res.x_signed, res.nnls_report.status.value, res.iterations
    else:
        solve = lh_solve if args.method == "lh" else lhdm_solve
        rep = solve(A, b, cfg)
        x, status, iters = rep.x_star, rep.status.value, rep.outer_iterations
    residual = float(np.linalg.norm(A.array @ x - b))
    if args.format == "json":
        text = json.dumps({"x": x.tolist(), "status": status, "iterations": iters,
                           "residual_norm": residual}) + "\n"
    else:
        text = "".join(repr(float(v)) + "\n" for v in x)
    _write(args.out, text, out)
    return EXIT_OK if status == "Converged" else EXIT_NUMERICAL


def _cmd_gen(args, out):
    cond = None
    if args.cond_lo is not None or args.cond_hi is not None:
        lo = args.cond_lo if args.cond_lo is not None else args.cond_hi
        hi = args.cond_hi if args.cond_hi is not None else args.cond_lo
        cond = (lo, hi)
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    sparsity = int(args.sparsity) if args.sparsity >= 1 else args.sparsity
    try:
        spec = bench.InstanceSpec(args.m, args.n, sparsity, cond,
                                  "nonnegative" if args.sign == "nonneg" else "signed",
                                  args.erc, args.seed, args.frame, args.family)
    except ValueError as exc:
        raise UsageError(str(exc))
    instances = bench.generate_family(spec, args.count)
    bench.save_dataset(args.out, instances)
    out.write(f"wrote {len(instances)} instances to {args.out}\n")
    return EXIT_OK


def _cmd_bench(args, out):
    dataset = bench.load_dataset(args.dataset)
    names = [s for s in args.solvers.split(",") if s]
    known = bench.solver_registry()
    unknown = [s for s in names if s not in known]
    if unknown or not names:
        raise UsageError(f"unknown solvers: {', '.join(unknown) or '(none given)'}")
    fmt = args.format or ("json" if Path(args.out).suffix in (".json", ".jsonl") else "csv")
    records = bench.run_benchmark(dataset, names, repetitions=args.reps)
    summary = bench.emit_report(records, args.out, fmt)
    if summary is None:
        out.write("no successful records\n")
        return EXIT_NUMERICAL
    for row in summary:
        out.write(f"{row['family']}: {row['target']} vs {row['baseline']} "
                  f"median {row['median_speedup']:.3f} mean {row['mean_speedup']:.3f} "
                  f"({row['count']} instances)\n")
    return EXIT_OK


def _cmd_diag(args, out):
    A = as_dense(load_matrix(args.matrix))
    if any(not 0 <= j < A.n for j in args.support) or not args.support:
        raise UsageError("support indices must be within the matrix columns")
    d = diagnose(A, args.support)
    out.write(json.dumps({"coherence": d.coherence, "erc_value": d.erc_value,
                          "erc_holds": d.erc_holds,
                          "coherence_uniqueness_bound": d.coherence_uniqueness_bound,
                          "certified_unique": d.certified_unique}) + "\n")
    return EXIT_OK


def _write(path, text, out):
    if path is None:
        out.write(text)
    else:
        Path(path).write_text(text)


_COMMANDS = {"solve": _cmd_solve, "gen": _cmd_gen, "bench": _cmd_bench, "diag": _cmd_diag}


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (OSError, MatrixFormatError) as exc:
        err.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except (LHDMError, ValueError, np.linalg.LinAlgError) as exc:
        err.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
