"""`fitgrowth decompose`: growth accounting and detrending for a macro panel."""
from pathlib import Path

from cli.commands import finish, pick
from fitgrowth_core.config import get_config
from fitgrowth_core.ingest_io import parse_macro_csv, write_table
from fitgrowth_core.pipeline import growth_tables


def register(subparsers) -> None:
    parser = subparsers.add_parser("decompose", help="split GDP growth into input growth and residual")
    parser.add_argument("--macro", type=Path, required=True, help="macro panel CSV")
    parser.add_argument("--alpha", type=float, help="fixed capital share instead of 1 - labor_share")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(run=run)


def run(args) -> int:
    alpha = pick(args.alpha, get_config().growth.alpha)

    panel = parse_macro_csv(args.macro)
    decompositions, detrended = growth_tables(panel, alpha)
    outputs = [
        write_table(args.out / "decomposition.csv", decompositions, "decomposition"),
        write_table(args.out / "detrended.csv", detrended, "detrended"),
        write_table(args.out / "cleaning.csv", panel.report),
    ]
    return finish(args, outputs, alpha=alpha if alpha is not None else "labor_share")
