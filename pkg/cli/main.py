"""Command-line entry point: parser, logging setup and exit-code mapping."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from cli.commands import decompose, fitness, kernel, pipeline, rca, simulate, synth
from fitgrowth_core import __version__
from fitgrowth_core.config import Config, LoggingConfig, set_config

logger = logging.getLogger("fitgrowth")

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2

COMMANDS = (rca, fitness, decompose, kernel, simulate, synth, pipeline)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fitgrowth",
        description="Economic fitness, growth accounting and poverty-trap dynamics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="YAML config file (overrides FITGROWTH_CONFIG)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def setup_logging(cfg: LoggingConfig, verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else getattr(logging, cfg.level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=cfg.format, stream=sys.stderr, force=True)


def load_config(path: Optional[Path]) -> Config:
    if path is not None and not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return Config.load(path)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        config = load_config(args.config)
        set_config(config)
        setup_logging(config.logging, args.verbose, args.quiet)
        return args.run(args)
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except ValueError as e:
        logger.error(f"Validation error: {e}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
