"""`fitgrowth pipeline`: every figure table from one input directory."""
from pathlib import Path

from cli.commands import finish, pick
from fitgrowth_core.config import get_config
from fitgrowth_core.pipeline import RESPONSES, Pipeline, parse_years


def register(subparsers) -> None:
    parser = subparsers.add_parser("pipeline", help="fitness, decomposition and kernels end to end")
    parser.add_argument("--in", dest="in_dir", type=Path, required=True,
                        help="directory with trade.csv and macro.csv")
    parser.add_argument("--years", help="fitness year range A..B")
    parser.add_argument("--alpha", type=float, help="fixed capital share")
    parser.add_argument("--response", choices=RESPONSES, default="input_growth")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--max-iter", type=int)
    parser.add_argument("--grid-n", type=int, help="1D grid points")
    parser.add_argument("--grid-n-2d", type=int, help="2D grid points per axis")
    parser.add_argument("--bootstrap-b", type=int)
    parser.add_argument("--level", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(run=run)


def run(args) -> int:
    cfg = get_config()
    effective = dict(
        alpha=pick(args.alpha, cfg.growth.alpha),
        tol=pick(args.tol, cfg.fitness.tol),
        max_iter=pick(args.max_iter, cfg.fitness.max_iter),
        grid_n=pick(args.grid_n, cfg.kernel.grid_n),
        grid_n_2d=pick(args.grid_n_2d, cfg.kernel.grid_n_2d),
        bootstrap_b=pick(args.bootstrap_b, cfg.kernel.bootstrap_b),
        level=pick(args.level, cfg.kernel.level),
        seed=pick(args.seed, cfg.kernel.seed),
    )

    result = Pipeline(args.in_dir, args.out).run(
        years=parse_years(args.years),
        alpha=effective["alpha"],
        response=args.response,
        B=effective["bootstrap_b"],
        level=effective["level"],
        seed=effective["seed"],
        grid_n=effective["grid_n"],
        grid_n_2d=effective["grid_n_2d"],
        tol=effective["tol"],
        max_iter=effective["max_iter"],
    )
    if effective["alpha"] is None:
        effective["alpha"] = "labor_share"
    return finish(args, result.outputs, **effective, recovery=result.recovery)
