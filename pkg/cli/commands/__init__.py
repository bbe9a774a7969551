"""Subcommands. Each module exposes ``register(subparsers)`` and ``run(args) -> int``."""
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from fitgrowth_core.manifest import write_manifest

logger = logging.getLogger(__name__)

# argparse bookkeeping that is not a run parameter
_NOT_PARAMETERS = {"run", "command", "config", "verbose", "quiet", "out"}


def pick(value: Optional[Any], default: Any) -> Any:
    return default if value is None else value


def parameters(args: argparse.Namespace, **effective: Any) -> Dict[str, Any]:
    """Flags as given, with config-resolved values filled in."""
    params = {k: v for k, v in vars(args).items() if k not in _NOT_PARAMETERS}
    params.update(effective)
    return params


def finish(args: argparse.Namespace, outputs: Iterable[Path], **effective: Any) -> int:
    outputs = list(outputs)
    write_manifest(args.out, args.command, parameters(args, **effective), outputs)
    logger.info(f"{args.command}: wrote {len(outputs)} tables to {args.out}")
    return 0
