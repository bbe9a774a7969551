"""`fitgrowth kernel`: kernel curves and surfaces from a detrended table."""
from pathlib import Path

from cli.commands import finish, pick
from fitgrowth_core.config import get_config
from fitgrowth_core.ingest_io import load_table, write_table
from fitgrowth_core.panel_model import DataValidationError, Tertile
from fitgrowth_core.pipeline import RESPONSES, kernel_1d, kernel_2d


def register(subparsers) -> None:
    parser = subparsers.add_parser("kernel", help="Nadaraya-Watson estimates with bootstrap bands")
    parser.add_argument("--detrended", type=Path, required=True, help="detrended table from decompose")
    parser.add_argument("--fitness", type=Path, help="fitness table (needed for --tertile and --dim 2)")
    parser.add_argument("--dim", type=int, choices=(1, 2), default=1)
    parser.add_argument("--tertile", choices=[t.value for t in Tertile])
    parser.add_argument("--response", choices=RESPONSES, default="input_growth")
    parser.add_argument("--bandwidth", type=float, nargs="+", help="one value per dimension (default: Silverman)")
    parser.add_argument("--grid-n", type=int, help="grid points per axis")
    parser.add_argument("--bootstrap-b", type=int, help="bootstrap resamples")
    parser.add_argument("--level", type=float, help="confidence level")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(run=run)


def run(args) -> int:
    cfg = get_config().kernel
    effective = dict(
        grid_n=pick(args.grid_n, cfg.grid_n if args.dim == 1 else cfg.grid_n_2d),
        bootstrap_b=pick(args.bootstrap_b, cfg.bootstrap_b),
        level=pick(args.level, cfg.level),
        seed=pick(args.seed, cfg.seed),
    )
    if args.bandwidth is not None and len(args.bandwidth) != args.dim:
        raise DataValidationError(f"--bandwidth needs {args.dim} value(s), got {len(args.bandwidth)}")
    if args.tertile and args.dim == 2:
        raise DataValidationError("--tertile applies to 1D curves only")
    if (args.tertile or args.dim == 2) and args.fitness is None:
        raise DataValidationError("--fitness is required for --tertile and --dim 2")

    detrended = load_table(args.detrended, "detrended")
    fitness = load_table(args.fitness, "fitness") if args.fitness is not None else None
    options = dict(
        response=args.response,
        grid_n=effective["grid_n"],
        B=effective["bootstrap_b"],
        level=effective["level"],
        seed=effective["seed"],
    )

    if args.dim == 1:
        bandwidth = args.bandwidth[0] if args.bandwidth else None
        estimate = kernel_1d(detrended, fitness=fitness, tertile=args.tertile, bandwidth=bandwidth, **options)
        name = f"kernel_1d_{args.tertile}.csv" if args.tertile else "kernel_1d.csv"
    else:
        bandwidth = tuple(args.bandwidth) if args.bandwidth else None
        estimate = kernel_2d(detrended, fitness, bandwidth=bandwidth, **options)
        name = "kernel_2d.csv"

    output = write_table(args.out / name, estimate)
    return finish(args, [output], **effective, bandwidth=estimate.bandwidth,
                  support_floor=cfg.support_floor, log_fitness=cfg.log_fitness)
