"""`fitgrowth rca`: revealed comparative advantage and M_cp for one year."""
from pathlib import Path

from cli.commands import finish, pick
from fitgrowth_core.config import get_config
from fitgrowth_core.ingest_io import parse_trade_csv, write_table
from fitgrowth_core.rca_binarize import binarize, compute_rca


def register(subparsers) -> None:
    parser = subparsers.add_parser("rca", help="RCA and binary country-product matrix for one year")
    parser.add_argument("--trade", type=Path, required=True, help="trade CSV (year,country,product,value)")
    parser.add_argument("--year", type=int, required=True)
    parser.add_argument("--threshold", type=float, help="RCA cut-off for M_cp (default from config)")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(run=run)


def run(args) -> int:
    threshold = pick(args.threshold, get_config().rca.threshold)

    flows = parse_trade_csv(args.trade)
    rca = compute_rca(flows, args.year)
    matrix = binarize(rca, threshold)

    outputs = [
        write_table(args.out / "rca.csv", rca),
        write_table(args.out / "matrix.csv", matrix),
        write_table(args.out / "cleaning.csv", flows.report),
    ]
    return finish(args, outputs, threshold=threshold)
