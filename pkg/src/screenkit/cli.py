"""Command-line surface: solve / path / bench / identify.

Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.
Trace CSVs use the schema epoch,primal,dual,gap,radius,n_screened,ms; bench
may fan cells out over threads, capped by the SCREENKIT_THREADS env var.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .data import DataError, load_csv, load_libsvm, make_synthetic
from .duality import lambda_max
from .identification import identification_report
from .linalg import GroupStructure
from .losses import QuadraticLoss
from .path import lambda_grid, solve_path
from .penalties import make_penalty
from .solver import RULES, SolveOptions, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOCONV = 3

BENCH_EPS_DEFAULT = (1e-4, 1e-6, 1e-8)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def beta_hash(beta, decimals=4):
    """Tolerance-rounded digest of a coefficient vector."""
    q = np.round(np.asarray(beta, dtype=np.float64), decimals=decimals) + 0.0
    return hashlib.sha256(q.tobytes()).hexdigest()


def _add_data_flags(p):
    src = p.add_argument_group("data")
    src.add_argument("--data", help="input file (libsvm or csv)")
    src.add_argument("--format", choices=("libsvm", "csv"), default="libsvm")
    src.add_argument("--target-column", help="csv target column name")
    src.add_argument("--synthetic", action="store_true",
                     help="generate a seeded synthetic dataset instead of reading a file")
    src.add_argument("--n", type=int, default=50)
    src.add_argument("--p", type=int, default=200)
    src.add_argument("--k-true", type=int, default=10)
    src.add_argument("--snr", type=float, default=5.0)
    src.add_argument("--seed", type=int, default=0)


def _add_problem_flags(p, rule=True):
    grp = p.add_argument_group("problem")
    grp.add_argument("--penalty", default="l1",
                     choices=("l1", "enet", "group_l2", "nonneg", "box"))
    grp.add_argument("--lambda-ratio", type=float, default=0.1,
                     help="lambda as a fraction of lambda_max")
    grp.add_argument("--lambda", dest="lambda_abs", type=float,
                     help="absolute lambda (overrides --lambda-ratio)")
    grp.add_argument("--en-alpha", type=float, default=0.5)
    grp.add_argument("--box-lo", type=float, default=0.0)
    grp.add_argument("--box-hi", type=float, default=1.0)
    grp.add_argument("--group-size", type=int, default=5,
                     help="contiguous group size for group_l2")
    grp.add_argument("--eps", type=float, default=1e-6,
                     help="stop when gap <= eps * ||y||^2")
    grp.add_argument("--max-epochs", type=int, default=100_000)
    grp.add_argument("--screen-every", type=int, default=10)
    if rule:
        grp.add_argument("--rule", default="dynamic_gap", choices=RULES)


def build_parser():
    parser = _Parser(prog="screenkit",
                     description="safe screening solver for separable composite problems")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve at a single lambda")
    _add_data_flags(p_solve)
    _add_problem_flags(p_solve)
    p_solve.add_argument("--out-dir", default=".")

    p_path = sub.add_parser("path", help="solve a regularization path")
    _add_data_flags(p_path)
    _add_problem_flags(p_path)
    p_path.add_argument("--grid-size", type=int, default=10)
    p_path.add_argument("--grid-ratio", type=float, default=0.01)
    p_path.add_argument("--out-dir", default=".")

    p_bench = sub.add_parser("bench", help="rule x eps timing grid")
    _add_data_flags(p_bench)
    _add_problem_flags(p_bench, rule=False)
    p_bench.add_argument("--rules", default="none,dynamic_gap",
                         help="comma-separated rule list")
    p_bench.add_argument("--eps-grid", default=",".join(f"{e:g}" for e in BENCH_EPS_DEFAULT),
                         help="comma-separated eps list")
    p_bench.add_argument("--out-dir", default=".")

    p_id = sub.add_parser("identify", help="active-set identification report")
    _add_data_flags(p_id)
    _add_problem_flags(p_id)
    p_id.add_argument("--out-dir", default=".")
    return parser


def _load_dataset(args):
    if args.synthetic:
        return make_synthetic(args.n, args.p, args.k_true, args.snr, args.seed)
    if not args.data:
        raise DataError("either --data or --synthetic is required")
    if args.format == "libsvm":
        return load_libsvm(args.data)
    if not args.target_column:
        raise DataError("--target-column is required for csv input")
    return load_csv(args.data, args.target_column)


def _build_problem(args, data):
    loss = QuadraticLoss(data.y)
    if args.penalty == "group_l2":
        groups = GroupStructure.contiguous(data.X, args.group_size)
    else:
        groups = GroupStructure.singletons(data.X)
    if args.penalty in ("nonneg", "box"):
        penalty = make_penalty(args.penalty, lo=args.box_lo, hi=args.box_hi)
        lam_ratio = None
    else:
        if args.lambda_abs is not None:
            lam = args.lambda_abs
            lam_ratio = None
        else:
            lam = args.lambda_ratio * lambda_max(
                data.X, loss, make_penalty(args.penalty, lam=1.0, en_alpha=args.en_alpha),
                groups,
            )
            lam_ratio = args.lambda_ratio
        if lam <= 0:
            raise DataError("lambda must be positive (is y all zero?)")
        penalty = make_penalty(args.penalty, lam=lam, en_alpha=args.en_alpha)
    return loss, penalty, groups, lam_ratio


def _options(args, rule=None, eps=None):
    return SolveOptions(
        tol_eps=eps if eps is not None else args.eps,
        max_epochs=args.max_epochs,
        screen_every=args.screen_every,
        rule=rule if rule is not None else getattr(args, "rule", "dynamic_gap"),
        seed=args.seed,
    )


def _summary(rule, eps, lam_ratio, sol, seconds, normalized=None):
    return {
        "rule": rule,
        "eps": eps,
        "lambda_ratio": lam_ratio,
        "epochs": sol.epochs_used,
        "seconds": seconds,
        "normalized_time": normalized,
        "n_screened_final": int(sol.state.n_screened_safe),
        "beta_hash": beta_hash(sol.beta),
    }


def _cmd_solve(args):
    data = _load_dataset(args)
    loss, penalty, groups, lam_ratio = _build_problem(args, data)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    sol, trace = solve(data.X, loss, penalty, _options(args), groups=groups)
    seconds = time.perf_counter() - t0
    trace.to_csv(out / "trace.csv")
    summary = _summary(args.rule, args.eps, lam_ratio, sol, seconds)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if not sol.converged:
        print("solve did not reach the requested tolerance", file=sys.stderr)
        return EXIT_NOCONV
    print(f"converged in {sol.epochs_used} epochs, gap={sol.final_gap:.3e}, "
          f"screened={sol.state.n_screened_safe}/{groups.n_groups}")
    return EXIT_OK


def _cmd_path(args):
    data = _load_dataset(args)
    loss, penalty, groups, _ = _build_problem(args, data)
    if args.penalty in ("nonneg", "box"):
        raise DataError("path mode needs a lambda-parameterized penalty")
    lam_max = lambda_max(data.X, loss, penalty, groups)
    spec = lambda_grid(lam_max, ratio=args.grid_ratio, n_points=args.grid_size)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = solve_path(data.X, loss, penalty, spec, _options(args), groups=groups)
    rows = []
    worst = EXIT_OK
    for t, (lam, sol) in enumerate(zip(result.lambdas, result.solutions)):
        if sol is None:
            worst = EXIT_NOCONV
            rows.append({"lambda": float(lam), "failed": True})
            continue
        result.traces[t].to_csv(out / f"trace_{t:03d}.csv")
        rows.append({
            "lambda": float(lam),
            "epochs": sol.epochs_used,
            "converged": sol.converged,
            "n_screened_final": int(sol.state.n_screened_safe),
            "beta_hash": beta_hash(sol.beta),
        })
        if not sol.converged:
            worst = EXIT_NOCONV
    (out / "path_summary.json").write_text(json.dumps(rows, indent=2) + "\n")
    print(f"path of {spec.n_points} points written to {out}")
    return worst


def _cmd_bench(args):
    data = _load_dataset(args)
    loss, penalty, groups, lam_ratio = _build_problem(args, data)
    rules = [r.strip() for r in args.rules.split(",") if r.strip()]
    for r in rules:
        if r not in RULES:
            raise DataError(f"unknown rule {r!r}")
    if "dynamic_gap" not in rules:  # normalization baseline is always run
        rules.append("dynamic_gap")
    eps_list = [float(e) for e in args.eps_grid.split(",") if e.strip()]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def run_cell(cell):
        rule, eps = cell
        t0 = time.perf_counter()
        sol, trace = solve(data.X, loss, penalty, _options(args, rule=rule, eps=eps),
                           groups=groups)
        seconds = time.perf_counter() - t0
        trace.to_csv(out / f"trace_{rule}_{eps:g}.csv")
        return rule, eps, sol, seconds

    cells = [(rule, eps) for eps in eps_list for rule in rules]
    workers = max(1, int(os.environ.get("SCREENKIT_THREADS", "1")))
    results = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rule, eps, sol, seconds in pool.map(run_cell, cells):
                results[(rule, eps)] = (sol, seconds)
    else:
        for cell in cells:
            rule, eps, sol, seconds = run_cell(cell)
            results[(rule, eps)] = (sol, seconds)

    summary = []
    worst = EXIT_OK
    for (rule, eps), (sol, seconds) in results.items():
        base = results[("dynamic_gap", eps)][1]
        summary.append(_summary(rule, eps, lam_ratio, sol, seconds,
                                normalized=seconds / base if base > 0 else None))
        if not sol.converged:
            worst = EXIT_NOCONV
    (out / "bench_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"bench grid of {len(cells)} cells written to {out}")
    return worst


def _cmd_identify(args):
    data = _load_dataset(args)
    loss, penalty, groups, _ = _build_problem(args, data)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sol, trace = solve(data.X, loss, penalty, _options(args, rule="dynamic_gap"),
                       groups=groups)
    ref_opts = _options(args, rule="dynamic_gap", eps=1e-12)
    ref, _ = solve(data.X, loss, penalty, ref_opts, groups=groups)
    report = identification_report(data.X, loss, penalty, groups, trace, ref.beta)
    trace.to_csv(out / "trace.csv")
    (out / "identify.json").write_text(report.to_json(indent=2) + "\n")
    print(report.to_json())
    return EXIT_OK if sol.converged else EXIT_NOCONV


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "path":
            return _cmd_path(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "identify":
            return _cmd_identify(args)
    except DataError as exc:
        print(f"screenkit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"screenkit: {exc}", file=sys.stderr)
        return EXIT_DATA
    parser.error(f"unknown command {args.command!r}")  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
