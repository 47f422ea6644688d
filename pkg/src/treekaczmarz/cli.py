"""Command-line front end.

Subcommands: solve, sweep, experiment, error-sim, example1, generate,
validate.  Report commands write CSV (17 significant digits, header row)
and can additionally render a matplotlib figure next to it via --plot.
Exit codes: 0 on success, 2 when the input fails validation, 1 for I/O
and parse failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .experiments import run_experiment
from .linalg import DimensionMismatch, ZeroRow, spectral_radius
from .problems import (
    MATRIX_KINDS,
    SHAPE_CUSTOM,
    SHAPE_FIG3,
    SHAPE_FIG8,
    TREE_SHAPES,
    MatrixEnsemble,
    ParseError,
    SizeMismatch,
    ValidationError,
    generate_system,
    load_problem_with_solution,
    save_problem,
)
from .reference import (
    TwoLineConfig,
    two_line_eigenvalues,
    two_line_matrix,
    two_line_optima,
)
from .robustness import ErrorModel, solve_with_errors
from .solver import SolverConfig, solve
from .sor import (
    DEFAULT_GRID_STEP,
    DEFAULT_OMEGA_MAX,
    omega_sweep,
    sweep_spectral_radius,
)
from .topology import TreeTopology, TreeValidationError

__all__ = ["build_parser", "main", "entry"]

CSV_DIGITS = 17
TABLE_DIGITS = 6


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _nonnegative_float(text: str) -> float:
    value = float(text)
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def _fmt(value, digits: int) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v, CSV_DIGITS) for v in row])
    return buf.getvalue()


def _table_text(header, rows) -> str:
    cells = [[_fmt(v, TABLE_DIGITS) for v in row] for row in rows]
    widths = [
        max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
        for i, h in enumerate(header)
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def _emit_report(args, header, rows) -> None:
    text = _csv_text(header, rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.format == "csv":
        sys.stdout.write(text)
    else:
        print(_table_text(header, rows))


def _load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _load_reference(path, dimension: int) -> np.ndarray:
    doc = _load_json(path)
    if isinstance(doc, dict):
        doc = doc.get("x_true")
    if not isinstance(doc, list) or len(doc) != dimension:
        raise ValidationError(
            f"reference in {path} must be a list of {dimension} numbers"
        )
    return np.array(doc, dtype=float)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_validate(args) -> int:
    system, _ = load_problem_with_solution(args.problem)
    print(
        f"ok: {system.tree.node_count} nodes, {system.total_rows} equations, "
        f"dimension {system.dimension}"
    )
    return 0


def cmd_solve(args) -> int:
    system, stored_true = load_problem_with_solution(args.problem)
    reference = None
    if args.reference:
        reference = _load_reference(args.reference, system.dimension)
    config = SolverConfig(
        omega=args.omega, max_iterations=args.max_iter, tolerance=args.tol
    )
    result = solve(system, config)
    errors = None
    if reference is not None:
        errors = [
            float(np.linalg.norm(out - reference))
            for out in result.trace.root_outputs
        ]
    if args.trace:
        header = ["iteration", "change_norm"]
        rows = [[n + 1, c] for n, c in enumerate(result.trace.change_norms)]
        if errors is not None:
            header.append("error_vs_reference")
            for row, err in zip(rows, errors):
                row.append(err)
        Path(args.trace).write_text(_csv_text(header, rows), encoding="utf-8")
    if args.plot:
        from .plots import save_trace_plot

        save_trace_plot(result.trace.change_norms, args.plot, errors=errors)
    print(f"converged: {result.converged}")
    print(f"iterations: {result.iterations_used}")
    print(f"final_change: {_fmt(result.final_change, CSV_DIGITS)}")
    print("solution: " + " ".join(_fmt(v, CSV_DIGITS) for v in result.solution))
    if errors is not None:
        print(f"error_vs_reference: {_fmt(errors[-1], CSV_DIGITS)}")
    if args.out:
        doc = {
            "solution": result.solution.tolist(),
            "iterations": result.iterations_used,
            "converged": result.converged,
            "final_change": result.final_change,
        }
        if stored_true is not None:
            doc["error_vs_stored_solution"] = float(
                np.linalg.norm(result.solution - stored_true)
            )
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return 0


def _sweep_summary(sweep) -> None:
    print(f"omega_opt: {sweep.omega_opt:.10g}")
    print(f"rho_opt: {sweep.rho_opt:.10g}")
    open_note = " (radius still below 1 at the end of the searched range)" if sweep.limit_open else ""
    print(f"omega_limit: {sweep.omega_limit:.10g}{open_note}")
    if sweep.reentry:
        points = ", ".join(f"{w:.6g}" for w in sweep.reentry)
        print(f"warning: radius dips below 1 again past the first crossing at {points}")


def cmd_sweep(args) -> int:
    if args.problem:
        system, _ = load_problem_with_solution(args.problem)
        sweep = omega_sweep(system, omega_max=args.omega_max, grid_step=args.grid_step)
        title = Path(args.problem).name
    else:
        cfg = TwoLineConfig(alpha=args.alpha, variant=args.example1)
        sweep = sweep_spectral_radius(
            lambda w: spectral_radius(two_line_matrix(cfg, w)),
            omega_max=args.omega_max,
            grid_step=args.grid_step,
        )
        title = f"two-line demo ({args.example1}, alpha={args.alpha:.4g})"
    header = ["omega", "spectral_radius"]
    rows = [[float(w), float(r)] for w, r in zip(sweep.omegas, sweep.radii)]
    _emit_report(args, header, rows)
    _sweep_summary(sweep)
    if args.plot:
        from .plots import save_sweep_plot

        save_sweep_plot(sweep, args.plot, title=title)
    return 0


def cmd_experiment(args) -> int:
    sizes = tuple(args.size) if args.size else (3, 8)
    report = run_experiment(
        sizes=sizes,
        kinds=MATRIX_KINDS,
        seed=args.seed,
        grid_step=args.grid_step,
        omega_max=args.omega_max,
    )
    header = [
        "size",
        "kind",
        "standard_omega_opt",
        "standard_rho_opt",
        "standard_e10",
        "distributed_omega_opt",
        "distributed_rho_opt",
        "distributed_e10",
    ]
    rows = [
        [
            row.size,
            row.kind,
            row.standard.omega_opt,
            row.standard.rho_opt,
            row.standard.error_10,
            row.distributed.omega_opt,
            row.distributed.rho_opt,
            row.distributed.error_10,
        ]
        for row in report.rows
    ]
    _emit_report(args, header, rows)
    for row in report.rows:
        if row.distributed.sweep.limit_open:
            print(
                f"note: size {row.size} {row.kind} tree sweep stays below radius 1 "
                f"up to omega {args.omega_max:g}"
            )
    if args.plot:
        from .plots import save_experiment_plot

        save_experiment_plot(report, args.plot)
    return 0


def cmd_error_sim(args) -> int:
    system, _ = load_problem_with_solution(args.problem)
    vector = None
    if args.vector:
        vector = np.array([float(x) for x in args.vector.split(",")], dtype=float)
    model = ErrorModel(
        magnitude_bound=args.magnitude,
        distribution="fixed_vector" if vector is not None else "uniform_ball",
        stages=args.stages,
        seed=args.seed,
        vector=vector,
    )
    config = SolverConfig(
        omega=args.omega, max_iterations=args.iterations, tolerance=0.0
    )
    _, report = solve_with_errors(system, config, model)
    bound_cell = report.bound if report.applicable else "N/A"
    header = ["iteration", "deviation_from_clean", "deviation_from_limit", "bound"]
    rows = []
    for n, dr in enumerate(report.drift):
        limit_cell = (
            float(report.deviations[n]) if n < len(report.deviations) else ""
        )
        rows.append([n + 1, float(dr), limit_cell, bound_cell])
    _emit_report(args, header, rows)
    print(f"limsup_estimate: {_fmt(report.limsup_estimate, 10)}")
    print(f"bound: {_fmt(report.bound, 10) if report.applicable else 'N/A'}")
    print(f"depth_factor: {report.depth_factor}")
    print(f"spectral_radius: {report.spectral_radius:.10g}")
    if report.applicable:
        print(f"holds: {report.holds}")
    else:
        print(f"not applicable: {report.note}")
    if args.plot:
        from .plots import save_error_sim_plot

        save_error_sim_plot(report.drift, report.deviations, report.bound, args.plot)
    return 0


def cmd_example1(args) -> int:
    cfg = TwoLineConfig(alpha=args.alpha, variant=args.variant)
    omega_max = args.omega_max
    if omega_max is None:
        omega_max = 2.0 if args.variant == "standard" else 4.0
    n = int(round(omega_max / args.grid_step))
    omegas = args.grid_step * np.arange(1, n + 1)
    analytic = np.array(
        [np.max(np.abs(two_line_eigenvalues(cfg, w))) for w in omegas]
    )
    numeric = np.array([spectral_radius(two_line_matrix(cfg, w)) for w in omegas])
    header = ["omega", "rho_analytic", "rho_numeric"]
    rows = [
        [float(w), float(a), float(r)] for w, a, r in zip(omegas, analytic, numeric)
    ]
    _emit_report(args, header, rows)
    omega_opt, rho_opt, omega_limit = two_line_optima(cfg)
    print(f"closed_form_omega_opt: {omega_opt:.10g}")
    print(f"closed_form_rho_opt: {rho_opt:.10g}")
    print(f"closed_form_omega_limit: {omega_limit:.10g}")
    print(f"max_curve_gap: {np.max(np.abs(analytic - numeric)):.3e}")
    if args.demo is not None:
        start = np.array([math.cos(args.demo), math.sin(args.demo)])
        step = two_line_matrix(cfg, omega_opt) @ start
        s, c = math.sin(cfg.alpha), math.cos(cfg.alpha)
        res_line = abs(-s * step[0] + c * step[1])
        res_axis = abs(step[1])
        print(
            "one_step_residuals: "
            f"{_fmt(res_line, 10)} (angled line), {_fmt(res_axis, 10)} (x-axis)"
        )
    if args.plot:
        from .plots import save_curve_comparison_plot

        save_curve_comparison_plot(
            omegas,
            analytic,
            numeric,
            args.plot,
            title=f"{args.variant}, alpha={args.alpha:.4g}",
        )
    return 0


def _load_topology(path) -> TreeTopology:
    doc = _load_json(path)
    if not isinstance(doc, dict) or "root" not in doc or "edges" not in doc:
        raise ParseError(f"{path}: topology file needs 'root' and 'edges'")
    edges = [(e["parent"], e["child"]) for e in doc["edges"]]
    weights = {
        (e["parent"], e["child"]): float(e["weight"])
        for e in doc["edges"]
        if "weight" in e
    }
    return TreeTopology.from_edges(doc["root"], edges, weights)


def cmd_generate(args) -> int:
    tree = None
    if args.shape == SHAPE_CUSTOM:
        if not args.topology:
            raise ValidationError("custom shape needs --topology")
        tree = _load_topology(args.topology)
        size = tree.node_count
    elif args.shape == SHAPE_FIG3:
        size = 3
    elif args.shape == SHAPE_FIG8:
        size = 8
    else:
        if args.size is None:
            raise SizeMismatch("chain shape needs --size")
        size = args.size
    if args.size is not None and args.size != size:
        raise SizeMismatch(
            f"--size {args.size} does not match the {size}-node {args.shape} tree"
        )
    ensemble = MatrixEnsemble(kind=args.kind, size=size, seed=args.seed)
    system, x_true = generate_system(ensemble, args.shape, tree=tree)
    save_problem(system, args.out, x_true=x_true)
    print(
        f"wrote {args.out}: {args.kind} {size}x{size}, seed {args.seed}, "
        f"|x_true| = {np.linalg.norm(x_true):.12g}"
    )
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def _add_report_flags(sub) -> None:
    sub.add_argument("--out", help="write the CSV report to this path")
    sub.add_argument(
        "--format", choices=("csv", "table"), default="table", help="stdout rendering"
    )
    sub.add_argument("--plot", help="render a figure (PNG) to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treekaczmarz",
        description="Kaczmarz iteration for equations distributed over a tree",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="check a problem file")
    p.add_argument("--problem", required=True)
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("solve", help="run the iteration on a problem file")
    p.add_argument("--problem", required=True)
    p.add_argument("--omega", type=_positive_float, default=1.0)
    p.add_argument("--tol", type=_nonnegative_float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--trace", help="write a per-iteration CSV to this path")
    p.add_argument("--reference", help="JSON vector (or problem file with x_true)")
    p.add_argument("--out", help="write the solution as JSON to this path")
    p.add_argument("--plot", help="render the convergence curve to this path")
    p.set_defaults(func=cmd_solve)

    p = subs.add_parser("sweep", help="spectral radius across relaxation values")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--problem")
    group.add_argument(
        "--example1",
        choices=("standard", "averaged"),
        help="sweep the two-line closed form instead of a problem file",
    )
    p.add_argument("--alpha", type=float, default=math.pi / 3)
    p.add_argument("--omega-max", type=_positive_float, default=DEFAULT_OMEGA_MAX)
    p.add_argument("--grid-step", type=_positive_float, default=DEFAULT_GRID_STEP)
    _add_report_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("experiment", help="chain versus tree benchmark table")
    p.add_argument(
        "--size", type=int, choices=(3, 8), action="append", help="repeatable; default both"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--omega-max", type=_positive_float, default=DEFAULT_OMEGA_MAX)
    p.add_argument("--grid-step", type=_positive_float, default=DEFAULT_GRID_STEP)
    _add_report_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = subs.add_parser("error-sim", help="iterate with injected transmission noise")
    p.add_argument("--problem", required=True)
    p.add_argument("--omega", type=_positive_float, default=1.0)
    p.add_argument("--magnitude", type=_nonnegative_float, default=1e-3)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument(
        "--stages", choices=("dispersion", "pooling", "both"), default="both"
    )
    p.add_argument("--vector", help="comma-separated fixed error vector")
    p.add_argument("--seed", type=int, default=0)
    _add_report_flags(p)
    p.set_defaults(func=cmd_error_sim)

    p = subs.add_parser("example1", help="two-line closed forms versus numerics")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--variant", choices=("standard", "averaged"), default="standard")
    p.add_argument("--omega-max", type=_positive_float, default=None)
    p.add_argument("--grid-step", type=_positive_float, default=DEFAULT_GRID_STEP)
    p.add_argument(
        "--demo",
        type=float,
        default=None,
        help="angle theta; run a one-step demo from (cos theta, sin theta)",
    )
    _add_report_flags(p)
    p.set_defaults(func=cmd_example1)

    p = subs.add_parser("generate", help="write a random problem file")
    p.add_argument("--kind", choices=MATRIX_KINDS, required=True)
    p.add_argument("--shape", choices=TREE_SHAPES, default=SHAPE_FIG8)
    p.add_argument("--size", type=int, default=None, help="node count (chain shape)")
    p.add_argument("--topology", help="topology JSON for the custom shape")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        ValidationError,
        TreeValidationError,
        ZeroRow,
        DimensionMismatch,
        SizeMismatch,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    try:
        code = main()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream consumer (head, etc.) closed the pipe; exit quietly
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 1
    sys.exit(code)


if __name__ == "__main__":
    entry()
