"""`fitgrowth simulate` and `fitgrowth equilibria`: the single-country capital map."""
from pathlib import Path

from cli.commands import finish, pick
from fitgrowth_core.config import get_config
from fitgrowth_core.ingest_io import parse_params_file, write_table
from fitgrowth_core.poverty_trap_sim import find_equilibria, simulate


def register(subparsers) -> None:
    sim = subparsers.add_parser("simulate", help="capital trajectory from K0")
    sim.add_argument("--params", type=Path, required=True, help="'key = value' parameter file")
    sim.add_argument("--k0", type=float, help="initial capital")
    sim.add_argument("--steps", type=int, help="number of periods T")
    sim.add_argument("--out", type=Path, required=True, help="output directory")
    sim.set_defaults(run=run_simulate)

    eq = subparsers.add_parser("equilibria", help="fixed points of the capital map and their stability")
    eq.add_argument("--params", type=Path, required=True, help="'key = value' parameter file")
    eq.add_argument("--k-max", type=float, help="upper end of the root scan")
    eq.add_argument("--n-scan", type=int, help="scan grid size")
    eq.add_argument("--out", type=Path, required=True, help="output directory")
    eq.set_defaults(run=run_equilibria)


def _params_dict(params) -> dict:
    return {f"param.{k}": v for k, v in params.model_dump().items()}


def run_simulate(args) -> int:
    cfg = get_config().simulation
    k0 = pick(args.k0, cfg.k0)
    steps = pick(args.steps, cfg.steps)

    params = parse_params_file(args.params)
    trajectory = simulate(params, k0, steps)
    output = write_table(args.out / "trajectory.csv", trajectory, "trajectory")
    return finish(args, [output], k0=k0, steps=steps, **_params_dict(params))


def run_equilibria(args) -> int:
    cfg = get_config().simulation
    k_max = pick(args.k_max, cfg.k_max)
    n_scan = pick(args.n_scan, cfg.n_scan)

    params = parse_params_file(args.params)
    equilibria = find_equilibria(params, k_max, n_scan)
    output = write_table(args.out / "equilibria.csv", equilibria)
    return finish(args, [output], k_max=k_max, n_scan=n_scan, scan_floor=cfg.scan_floor,
                  upper_unbracketed=equilibria.upper_unbracketed, **_params_dict(params))
