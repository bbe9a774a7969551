"""`fitgrowth fitness`: per-year fitness and complexity with a convergence log."""
from pathlib import Path

from cli.commands import finish, pick
from fitgrowth_core.config import get_config
from fitgrowth_core.ingest_io import parse_trade_csv, write_table
from fitgrowth_core.panel_model import UpdateScheme
from fitgrowth_core.pipeline import fitness_by_year, parse_years, select_years, write_fitness_tables


def register(subparsers) -> None:
    parser = subparsers.add_parser("fitness", help="fitness-complexity iteration for each year")
    parser.add_argument("--trade", type=Path, required=True, help="trade CSV (year,country,product,value)")
    parser.add_argument("--years", help="year range A..B (default: every year in the file)")
    parser.add_argument("--threshold", type=float, help="RCA cut-off for M_cp")
    parser.add_argument("--tol", type=float, help="relative change tolerance")
    parser.add_argument("--max-iter", type=int, help="iteration budget per year")
    parser.add_argument("--scheme", choices=[s.value for s in UpdateScheme], help="update order")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(run=run)


def run(args) -> int:
    cfg = get_config()
    effective = dict(
        threshold=pick(args.threshold, cfg.rca.threshold),
        tol=pick(args.tol, cfg.fitness.tol),
        max_iter=pick(args.max_iter, cfg.fitness.max_iter),
        scheme=pick(args.scheme, cfg.fitness.scheme),
    )

    flows = parse_trade_csv(args.trade)
    years = select_years(flows.years(), parse_years(args.years))
    per_year = fitness_by_year(
        flows, years, effective["threshold"],
        tol=effective["tol"], max_iter=effective["max_iter"], scheme=effective["scheme"],
    )

    outputs = write_fitness_tables(args.out, per_year)
    outputs.append(write_table(args.out / "cleaning.csv", flows.report))
    return finish(args, outputs, **effective, rank_window=cfg.fitness.rank_window, floor=cfg.fitness.floor)
