"""Command-line entry point.

Subcommands: ``weights``, ``solve``, ``converge``, ``stability``,
``lambda-sweep``, ``apriori``.  Experiment subcommands read a config file,
emit a JSON report plus a CSV table into ``--out-dir``, and exit 0 iff every
report entry passes.  Floats are serialised with 17 significant digits so
outputs round-trip exactly and repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    RunConfig,
    build_problem,
    float_list,
    int_list,
    load_config,
)
from .diagnostics import (
    apriori_data,
    apriori_lhs,
    convergence_study,
    lambda_perturbation_check,
    stability_ladder,
)
from .kernel import KernelSpec, TimeGrid, weights_closed_form, weights_numeric
from .operators import ProblemInstance
from .reporting import DiagnosticsReport, ReportEntry
from .stepper import run


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def emit_csv(path: Path, header: list[str], rows: list[list]) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    except OSError as exc:
        raise SystemExit(f"cannot write CSV {path}: {exc}")


def emit_json(path: Path, payload: dict) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise SystemExit(f"cannot write JSON {path}: {exc}")


def _pmap(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _report_payload(cfg: RunConfig, report: DiagnosticsReport, seed: int) -> dict:
    return {"config": cfg.as_dict(), "seed": seed, "report": report.as_dict()}


def cmd_weights(args) -> int:
    spec = KernelSpec(lam=args.lam, T=args.T)
    grid = TimeGrid(N=args.N, T=args.T)
    closed = weights_closed_form(spec, grid)
    numeric = weights_numeric(spec, grid, panels=args.numeric_panels)
    rows = [
        [i, i * grid.tau, closed.gamma[i - 1], numeric.gamma[i - 1],
         abs(closed.gamma[i - 1] - numeric.gamma[i - 1])]
        for i in range(1, args.N + 1)
    ]
    header = ["i", "t_i", "gamma_closed", "gamma_numeric", "abs_diff"]
    if args.out:
        emit_csv(Path(args.out), header, rows)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(_fmt(x) for x in row))
    return 0


def _load(args):
    cfg = load_config(args.config, args.override)
    problem, stepper = build_problem(cfg)
    return cfg, problem, stepper


def cmd_solve(args) -> int:
    cfg, problem, stepper = _load(args)
    traj = run(problem, stepper)
    d = problem.A.dim
    header = (["n", "t"] + [f"v{i}" for i in range(d)] + [f"K{i}" for i in range(d)]
              + ["newton_iters", "residual"])
    rows = [
        [n, traj.grid.nodes[n], *traj.v.values[n], *traj.K.values[n],
         int(traj.newton_iters[n]), traj.residuals[n]]
        for n in range(traj.grid.N + 1)
    ]
    out = Path(args.out) if args.out else Path(args.out_dir) / "trajectory.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_csv(out, header, rows)
    return 0


def cmd_converge(args) -> int:
    cfg, problem, stepper = _load(args)
    n_list = int_list(cfg["experiment.n_list"], "experiment.n_list")
    fine = cfg["experiment.fine_steps"] or 32 * max(n_list)
    reference = "oracle" if problem.A.name == "linear" else "self"
    table = convergence_study(problem, n_list, stepper, reference=reference,
                              fine_steps=fine)
    report = DiagnosticsReport()
    if reference == "oracle":
        for row in table.rows[1:]:
            report.add(ReportEntry(
                name=f"observed_order_N_{row.N}", lhs=abs(row.order - 1.0), rhs=0.2,
                tag="first-order-self-convergence"))
    else:
        for prev, row in zip(table.rows, table.rows[1:]):
            report.add(ReportEntry(
                name=f"error_decrease_N_{row.N}", lhs=row.error, rhs=prev.error,
                tag="self-convergence"))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_csv(out_dir / "convergence.csv", ["N", "tau", "error", "order"],
             [[r.N, r.tau, r.error, r.order] for r in table.rows])
    emit_json(out_dir / "convergence_report.json", _report_payload(cfg, report, args.seed))
    return 0 if report.all_pass else 1


def cmd_stability(args) -> int:
    cfg, problem, stepper = _load(args)
    deltas = float_list(cfg["experiment.deltas"], "experiment.deltas")
    direction = np.ones(problem.A.dim) / np.sqrt(problem.A.dim)

    def perturbed(delta: float) -> ProblemInstance:
        return ProblemInstance(
            A=problem.A, B=problem.B, u0=problem.u0,
            v0=problem.v0 + delta * direction,
            forcing=problem.forcing, kernel=problem.kernel)

    report = stability_ladder(perturbed, problem, deltas, stepper)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [[d, e.lhs, e.lhs / d**2]
            for d, e in zip(deltas, report.entries)]
    emit_csv(out_dir / "stability.csv", ["delta", "sup_lhs", "ratio"], rows)
    emit_json(out_dir / "stability_report.json", _report_payload(cfg, report, args.seed))
    return 0 if report.all_pass else 1


def cmd_lambda_sweep(args) -> int:
    cfg, problem, stepper = _load(args)
    mus = float_list(cfg["experiment.mus"], "experiment.mus")
    reports = _pmap(lambda mu: lambda_perturbation_check(problem, mu, stepper),
                    mus, args.threads)
    report = DiagnosticsReport()
    rows = []
    for mu, rep in zip(mus, reports):
        report.extend(rep)
        entry = rep.entries[0]
        rows.append([mu, entry.lhs, entry.rhs, entry.abs_tol, entry.passed])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_csv(out_dir / "lambda_sweep.csv", ["mu", "lhs", "rhs", "slack", "pass"], rows)
    emit_json(out_dir / "lambda_sweep_report.json", _report_payload(cfg, report, args.seed))
    return 0 if report.all_pass else 1


def cmd_apriori(args) -> int:
    cfg, problem, stepper = _load(args)
    n_list = int_list(cfg["experiment.n_list"], "experiment.n_list")

    def one(N):
        from dataclasses import replace
        traj = run(problem, replace(stepper, N=N))
        return apriori_lhs(traj, problem), apriori_data(problem, traj.grid)

    results = _pmap(one, n_list, args.threads)
    ratios = [lhs / data for lhs, data in results]
    report = DiagnosticsReport()
    report.add(ReportEntry(
        name="apriori_ratio_spread", lhs=max(ratios) / min(ratios), rhs=4.0,
        tag="discrete-energy-estimate"))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [[N, lhs, data, lhs / data] for N, (lhs, data) in zip(n_list, results)]
    emit_csv(out_dir / "apriori.csv", ["N", "lhs", "data", "ratio"], rows)
    emit_json(out_dir / "apriori_report.json", _report_payload(cfg, report, args.seed))
    return 0 if report.all_pass else 1


def _add_common(sub) -> None:
    sub.add_argument("--config", required=True, help="path to the config file")
    sub.add_argument("--out-dir", default=".", help="directory for CSV/JSON outputs")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                     help="config override, repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memstep",
        description="implicit Euler / product-quadrature solver for evolution "
                    "equations with exponentially decaying memory")
    subs = parser.add_subparsers(dest="command", required=True)

    w = subs.add_parser("weights", help="emit quadrature weights as CSV")
    w.add_argument("--lambda", dest="lam", type=float, required=True)
    w.add_argument("--T", type=float, required=True)
    w.add_argument("--N", type=int, required=True)
    w.add_argument("--numeric-panels", type=int, default=4096)
    w.add_argument("--out", default=None)
    w.set_defaults(func=cmd_weights)

    s = subs.add_parser("solve", help="run the time stepper, emit the trajectory")
    _add_common(s)
    s.add_argument("--out", default=None, help="trajectory CSV path")
    s.set_defaults(func=cmd_solve)

    for name, func, help_text in [
        ("converge", cmd_converge, "convergence ladder against a reference"),
        ("stability", cmd_stability, "data-perturbation stability ladder"),
        ("lambda-sweep", cmd_lambda_sweep, "relaxation-rate perturbation bound"),
        ("apriori", cmd_apriori, "energy-estimate boundedness over an N ladder"),
    ]:
        sub = subs.add_parser(name, help=help_text)
        _add_common(sub)
        sub.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
