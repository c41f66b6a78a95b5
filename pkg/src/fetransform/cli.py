"""Command line entry point: ``fetransform study <name> --family <family> ...``."""

import argparse
import sys

from .experiments import STUDIES, STUDY_FAMILIES, emit_report, mesh_sizes, result_rows, run_study
from .linalg import LinAlgError
from .mesh_assembly import FAMILIES, SOLVERS, SolverFailure


def build_parser():
    parser = argparse.ArgumentParser(prog="fetransform",
                                     description="Mapped finite element studies on the unit square.")
    sub = parser.add_subparsers(dest="command", required=True)
    study = sub.add_parser("study", help="run a conditioning or convergence study")
    study.add_argument("name", choices=STUDIES)
    study.add_argument("--family", required=True, choices=FAMILIES)
    study.add_argument("--nmax", type=int, default=32, help="finest mesh; sizes double from 2")
    study.add_argument("--out", required=True, help="output directory for CSV and plot script")
    study.add_argument("--unscaled", action="store_true", help="use the unscaled nodal basis")
    study.add_argument("--solver", choices=SOLVERS, default="cg")
    study.add_argument("--tol", type=float, default=1e-13, help="relative residual for cg")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.family not in STUDY_FAMILIES[args.name]:
        print(f"error: {args.family} is not part of the {args.name} study "
              f"(choose from {', '.join(STUDY_FAMILIES[args.name])})", file=sys.stderr)
        return 2
    try:
        Ns = mesh_sizes(args.nmax)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        res = run_study(args.name, args.family, Ns, scaled=not args.unscaled,
                        solver=args.solver, tol=args.tol)
    except (SolverFailure, LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    csv_path, _ = emit_report(res, args.out, name=f"{args.name}_{args.family}")
    for row in result_rows(res):
        print(",".join(str(x) for x in row[:4]) + f",{row[4]:.6e}")
    print(f"wrote {csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
