"""`fitgrowth synth`: write a synthetic world in the real input formats."""
from pathlib import Path

from cli.commands import finish, pick
from fitgrowth_core.config import get_config
from fitgrowth_core.ingest_io import parse_fitness_spec, write_table
from fitgrowth_core.poverty_trap_sim import synth_world


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="generate trade, macro and true-fitness tables")
    parser.add_argument("--countries", type=int, help="number of countries")
    parser.add_argument("--steps", type=int, help="simulated periods T")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--fitness-spec", type=Path, help="'levels = ...' or 'span_min/span_max' file")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(run=run)


def run(args) -> int:
    cfg = get_config().synth
    steps = pick(args.steps, cfg.steps)
    seed = pick(args.seed, cfg.seed)

    spec = parse_fitness_spec(args.fitness_spec) if args.fitness_spec is not None else None
    if spec is not None and spec.levels is not None:
        countries = pick(args.countries, len(spec.levels))
    else:
        countries = pick(args.countries, cfg.n_countries)
    levels = spec.resolve(countries) if spec is not None else None

    world = synth_world(countries, steps, seed, levels)
    outputs = [
        write_table(args.out / "trade.csv", world.flows),
        write_table(args.out / "macro.csv", world.panel),
        write_table(args.out / "true_fitness.csv", world.true_fitness, "true_fitness"),
    ]
    return finish(args, outputs, countries=countries, steps=steps, seed=seed,
                  fitness_levels=list(world.true_fitness.values()))
