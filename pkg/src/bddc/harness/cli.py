"""``bddc-solve`` command line."""
import argparse
import logging
import sys

from ..errors import BddcError
from ..problem import poisson_problem
from .bundle import export_bundle, ingest_bundle
from .study import ExperimentConfig, run_problem, run_study, square_side, write_csv


def _k_list(text):
    try:
        ks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list '{text}'")
    if not ks:
        raise argparse.ArgumentTypeError("k list is empty")
    return ks


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="bddc-solve",
                                description="BDDC-preconditioned CG experiments on 2D Poisson.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a weak/strong/compare/single study")
    run.add_argument("--mode", choices=("weak", "strong", "compare", "single"), default="single")
    run.add_argument("--k", type=_k_list, default=[2], help="comma-separated subdomains per side")
    run.add_argument("--local-cells", type=_positive, default=32,
                     help="cells per subdomain side (weak, compare, single)")
    run.add_argument("--global-cells", type=_positive, default=None,
                     help="cells per side of the whole mesh (strong; default local-cells * max k)")
    run.add_argument("--tol", type=float, default=1e-8)
    run.add_argument("--workers", type=_positive, default=1)
    run.add_argument("--seed", type=int, default=1)
    run.add_argument("--rhs", choices=("manufactured", "random"), default="manufactured")
    run.add_argument("--variant", choices=("literal", "symmetric"), default="literal")
    run.add_argument("--max-iterations", type=_positive, default=10_000)
    run.add_argument("--out", default=None, help="CSV path (stdout if omitted)")

    exp = sub.add_parser("export", help="write a generated problem as a subdomain bundle")
    exp.add_argument("--k", type=int, required=True)
    exp.add_argument("--local-cells", type=_positive, required=True)
    exp.add_argument("--rhs", choices=("manufactured", "random"), default="manufactured")
    exp.add_argument("--seed", type=int, default=1)
    exp.add_argument("--out", required=True, help="bundle directory")

    ing = sub.add_parser("ingest", help="solve a subdomain bundle")
    ing.add_argument("--bundle", required=True, help="manifest path or bundle directory")
    ing.add_argument("--tol", type=float, default=1e-8)
    ing.add_argument("--workers", type=_positive, default=1)
    ing.add_argument("--variant", choices=("literal", "symmetric"), default="literal")
    ing.add_argument("--max-iterations", type=_positive, default=10_000)
    ing.add_argument("--out", default=None)
    return p


def _emit(results, out):
    text = write_csv(results, out)
    if out is None:
        sys.stdout.write(text)
    return 0 if all(r.ok for r in results) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = ExperimentConfig(mode=args.mode, k_list=args.k, local_cells=args.local_cells,
                                   global_cells=args.global_cells, tolerance=args.tol,
                                   workers=args.workers, seed=args.seed, rhs=args.rhs,
                                   variant=args.variant, max_iterations=args.max_iterations,
                                   output_path=args.out)
            return _emit(run_study(cfg), args.out)
        if args.command == "export":
            manifest = export_bundle(poisson_problem(args.k, args.local_cells, args.rhs, args.seed),
                                     args.out)
            print(manifest)
            return 0
        problem = ingest_bundle(args.bundle)
        n = problem.decomposition.n_subdomains
        res = run_problem(problem, "ingest", square_side(n), tolerance=args.tol,
                          workers=args.workers, variant=args.variant,
                          max_iterations=args.max_iterations)
        return _emit([res], args.out)
    except (BddcError, ValueError, OSError) as exc:
        print(f"bddc-solve: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
