"""Command-line entry point: ``pcbb solve|generate|gen-constraints|heuristic|oracle|bench``."""
from __future__ import annotations

import argparse
import sys

from .engine import Status, solve_dataset
from .errors import PcbbError, RootInfeasible
from .heuristics import multi_restart
from .io import (
    build_report,
    dump_report,
    generate_constraints,
    generate_synthetic,
    load_csv,
    load_labels,
    parse_constraints,
    write_constraints,
    write_csv,
)
from .metrics import external_metrics
from .model import ConstraintSet, SolverConfig, check_pairs
from .oracle import brute_force
from .preprocess import collapse

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _progress(event):
    print(
        f"[t={event['t']:.1f}s] lb={event['lb']:.6g} ub={event['ub']:.6g} "
        f"gap={100 * event['gap']:.4g}% nodes={event['nodes']}",
        file=sys.stderr,
        flush=True,
    )


def _load_problem(args):
    data = load_csv(args.data, labels_last=getattr(args, "labels_last", False))
    cons = parse_constraints(args.constraints, data.n) if args.constraints else ConstraintSet()
    return data, cons


def _config(args) -> SolverConfig:
    return SolverConfig(
        k=args.k,
        rel_gap_tol=args.gap,
        time_limit_s=args.time_limit,
        max_nodes=args.max_nodes,
        threads=args.threads,
        seed=args.seed,
        group_size_max=args.group_size,
        ld_iterations=args.ld_iters,
        heuristic_restarts=args.restarts,
        paper_rho_rule=args.paper_rho_rule,
        symmetry_breaking=not args.no_symmetry_breaking,
    )


def _emit(report, out):
    text = dump_report(report, out)
    if out is None:
        print(text)


def cmd_solve(args):
    data, cons = _load_problem(args)
    config = _config(args)
    result, inst = solve_dataset(data, cons, config, None if args.quiet else _progress)
    constant = inst.constant if inst is not None else 0.0
    metrics = None
    if result.best is not None:
        if not check_pairs(result.best.assignment, cons):
            raise PcbbError("internal error: reported assignment violates a constraint")
        if data.labels is not None:
            metrics = external_metrics(result.best.assignment, data.labels)
    report = build_report(result, data, config, constant, metrics)
    if result.witness is not None:
        report["infeasibility_witness"] = repr(result.witness)
    _emit(report, args.out)
    return EXIT_INFEASIBLE if result.status == Status.INFEASIBLE else EXIT_OK


def cmd_heuristic(args):
    data, cons = _load_problem(args)
    try:
        inst = collapse(data, cons, args.k)
    except RootInfeasible as exc:
        _emit({"status": "Infeasible", "objective": None, "reason": str(exc)}, args.out)
        return EXIT_INFEASIBLE
    sol = multi_restart(inst, args.k, args.restarts, args.seed)
    if sol is None:
        _emit({"status": "Failed", "objective": None, "restarts": args.restarts}, args.out)
        return EXIT_INFEASIBLE
    assignment = inst.expand(sol.assignment)
    report = {
        "status": "Feasible",
        "objective": sol.objective,
        "constant_term": inst.constant,
        "k": args.k,
        "restarts": args.restarts,
        "seed": args.seed,
        "centroids": sol.centroids.tolist(),
        "assignment": assignment.tolist(),
    }
    if data.labels is not None:
        report["metrics"] = external_metrics(assignment, data.labels)
    _emit(report, args.out)
    return EXIT_OK


def cmd_oracle(args):
    data, cons = _load_problem(args)
    cost, sol = brute_force((data, cons), args.k)
    if sol is None:
        _emit({"status": "Infeasible", "objective": None}, args.out)
        return EXIT_INFEASIBLE
    _emit({"status": "Optimal", "objective": cost, "assignment": sol.assignment.tolist()}, args.out)
    return EXIT_OK


def cmd_generate(args):
    data = generate_synthetic(args.n, args.d, args.k_true, args.seed, args.spread)
    write_csv(args.out_data, data.points)
    if args.out_labels:
        with open(args.out_labels, "w") as fh:
            fh.writelines(f"{int(v)}\n" for v in data.labels)
    return EXIT_OK


def cmd_gen_constraints(args):
    labels = load_labels(args.labels)
    cons = generate_constraints(labels, args.ml, args.cl, args.seed)
    write_constraints(args.out, cons)
    return EXIT_OK


def cmd_bench(args):
    from .benchmark import density_sweep

    rows = density_sweep(
        n=args.n,
        d=args.d,
        k=args.k,
        seed=args.seed,
        kind=args.kind,
        divisors=[int(v) for v in args.divisors.split(",")],
        time_limit_s=args.time_limit,
        threads=args.threads,
        gap=args.gap,
    )
    _emit({"rows": rows}, args.out)
    return EXIT_OK


def _solver_flags(p):
    p.add_argument("--data", required=True)
    p.add_argument("--constraints")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--labels-last", action="store_true", help="last CSV column holds ground-truth labels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--out")


def make_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="pcbb", description="Globally optimal k-means under must-link/cannot-link constraints.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("solve", help="branch-and-bound to a certified gap")
    _solver_flags(p)
    p.add_argument("--gap", type=float, default=1e-3, help="relative gap tolerance")
    p.add_argument("--time-limit", type=float, default=float("inf"))
    p.add_argument("--max-nodes", type=int, default=5_000_000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--group-size", type=int, default=4)
    p.add_argument("--ld-iters", type=int, default=20)
    p.add_argument("--paper-rho-rule", action="store_true")
    p.add_argument("--no-symmetry-breaking", action="store_true")
    p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("heuristic", help="COP-k-means with restarts")
    _solver_flags(p)
    p.set_defaults(func=cmd_heuristic)

    p = sub.add_parser("oracle", help="exhaustive enumeration for tiny instances")
    p.add_argument("--data", required=True)
    p.add_argument("--constraints")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("generate", help="seeded Gaussian blobs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k-true", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--spread", type=float, default=10.0)
    p.add_argument("--out-data", required=True)
    p.add_argument("--out-labels")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("gen-constraints", help="random-pair ML/CL sampling from labels")
    p.add_argument("--labels", required=True)
    p.add_argument("--ml", type=int, default=0)
    p.add_argument("--cl", type=int, default=0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_constraints)

    p = sub.add_parser("bench", help="constraint-density sweep on synthetic data")
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--kind", choices=["ml", "cl", "both"], default="ml")
    p.add_argument("--divisors", default="2,4,8,16,32,64", help="constraint counts are n/divisor")
    p.add_argument("--time-limit", type=float, default=600.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--gap", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PcbbError, OSError, ValueError) as exc:
        print(f"pcbb: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
