"""``sparse12`` command-line front end.

Exit codes: 0 success, 1 usage error, 2 runtime or domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, problems, regularity, solvers
from .errors import Sparse12Error

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; route it to our own code instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sparse12", description="l1-2 regularised sparse recovery toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a seeded instance file")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--kind", choices=("gaussian", "pdct"), default="gaussian")
    g.add_argument("--s", type=int, required=True, help="sparsity of the true signal")
    g.add_argument("--sigma", type=float, default=0.0, help="absolute noise std")
    g.add_argument("--seed", type=int, default=0, help="seed for matrix, signal and noise")
    g.add_argument("--embed", action="store_true", help="store arrays, not just seeds")
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run one solver on an instance file")
    s.add_argument("--solver", choices=solvers.SOLVERS, required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    s.add_argument("--v", type=float, default=0.5, help="stepsize")
    s.add_argument("--trunc-s", type=int, default=None)
    s.add_argument("--lambda0", type=float, default=None,
                   help="ITAC starting lambda (default ||A^T b||_inf)")
    s.add_argument("--gamma", type=float, default=0.98)
    s.add_argument("--max-iter", type=int, default=500)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--trace", default=None, help="per-iteration CSV output")

    c = sub.add_parser("certify", help="regularity constants and sufficient conditions")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--s", type=int, required=True)
    c.add_argument("--t", type=int, required=True)
    c.add_argument("--max-supports", type=int, default=regularity.DEFAULT_GUARD,
                   help="enumeration guard per constant")
    c.add_argument("--allow-partial", action="store_true",
                   help="report even if some constants exceed the guard")
    c.add_argument("--json", action="store_true", help="print JSON instead of text")

    b = sub.add_parser("bench", help="run an experiment plan file")
    b.add_argument("plan")
    b.add_argument("--out-dir", default=".")
    b.add_argument("--trials", type=int, default=None, help="override the plan's trial count")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--svg", action="store_true", help="also write plot.svg (needs matplotlib)")
    return p


def _cmd_generate(args):
    spec = problems.InstanceSpec(m=args.m, n=args.n, matrix_kind=args.kind, s=args.s,
                                 sigma=args.sigma, matrix_seed=args.seed,
                                 signal_seed=args.seed, noise_seed=args.seed)
    inst = problems.make_instance(spec)
    problems.save_instance(inst, args.out, embed_arrays=args.embed)
    print(f"wrote {args.out} (m={args.m} n={args.n} kind={args.kind} s={args.s})")
    return EXIT_OK


def _cmd_solve(args):
    inst = problems.load_instance(args.inp)
    lam0 = args.lambda0
    if args.solver == "itac" and lam0 is None:
        lam0 = float(np.max(np.abs(inst.A.T @ inst.b)))
    trunc = args.trunc_s
    if args.solver == "itat" and trunc is None:
        trunc = inst.truth.sparsity
    cfg = solvers.SolverConfig(lam=args.lam, v=args.v, max_iter=args.max_iter, rel_tol=args.tol,
                               trunc_s=trunc, lam0=lam0, gamma=args.gamma)
    tr = solvers.solve(args.solver, inst, cfg)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("iteration", "objective", "residual", "rel_error", "lambda"))
            for k in range(tr.iterations_used + 1):
                w.writerow([k, repr(float(tr.objective[k])), repr(float(tr.residual[k])),
                            repr(float(tr.rel_error[k])), repr(float(tr.lam[k]))])
    flags = f" flags={','.join(tr.flags)}" if tr.flags else ""
    print(f"solver={tr.solver} re={tr.final_rel_error:.6e} iterations={tr.iterations_used} "
          f"terminated_by={tr.terminated_by} nnz={int(np.count_nonzero(tr.x))}{flags}")
    return EXIT_OK


def _fmt(v):
    return "-" if v is None else f"{v:.6g}"


def format_report(rep: regularity.RegularityReport) -> str:
    lines = [f"regularity report  s={rep.s} t={rep.t}  unit_columns={rep.unit_columns}"]
    for k, v in sorted(rep.delta.items()):
        lines.append(f"  delta_{k:<8d} {_fmt(v)}")
    for (a, b), v in sorted(rep.theta.items()):
        lines.append(f"  theta_{a},{b:<6d} {_fmt(v)}")
    lines.append(f"  mu             {_fmt(rep.mu)}")
    for k in sorted(rep.sigma_min):
        lines.append(f"  sigma_min({k})   {_fmt(rep.sigma_min[k])}")
    for k in sorted(rep.sigma_max):
        lines.append(f"  sigma_max({k})   {_fmt(rep.sigma_max[k])}")
    lines.append("conditions:")
    for c in regularity.CONDITIONS:
        lines.append(f"  ({c:>3}) {rep.status.get(c, '-'):<15} phi >= {_fmt(rep.phi_lower_bounds.get(c))}")
    for what, why in rep.skipped.items():
        lines.append(f"  skipped {what}: {why}")
    return "\n".join(lines)


def _cmd_certify(args):
    inst = problems.load_instance(args.inp)
    rep = regularity.rec_certify(inst.A, args.s, args.t, guard=args.max_supports)
    print(json.dumps(rep.to_dict(), indent=1) if args.json else format_report(rep))
    if rep.skipped and not args.allow_partial:
        print(f"sparse12 certify: {len(rep.skipped)} constant(s) exceed the enumeration guard "
              f"of {args.max_supports} supports; raise --max-supports or pass --allow-partial",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_bench(args):
    plan = bench.load_plan(args.plan)
    if args.trials is not None:
        plan.trials = args.trials
    if args.workers is not None:
        plan.workers = args.workers
    res = bench.run_plan(plan)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res.write_raw_csv(out / "raw.csv")
    res.write_aggregate_csv(out / "aggregate.csv")
    if res.curves:
        res.write_curves_csv(out / "curves.csv")
    if args.svg:
        res.plot_svg(out / "plot.svg")
    for a in res.aggregates:
        sv = "" if a.sweep_value is None else f"{plan.sweep}={a.sweep_value} "
        print(f"{sv}{a.solver}: mean_re={a.mean_re:.4e} median_re={a.median_re:.4e} "
              f"success={a.success_rate:.2f} iters={a.mean_iters:.1f}")
    return EXIT_OK


_COMMANDS = {"generate": _cmd_generate, "solve": _cmd_solve,
             "certify": _cmd_certify, "bench": _cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (Sparse12Error, ValueError, OSError) as exc:
        kind = type(exc).__name__
        print(f"sparse12 {args.command}: {kind}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ImportError as exc:
        print(f"sparse12 {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
