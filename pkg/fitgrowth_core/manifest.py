"""Run manifest: every effective parameter of a CLI run, rendered next to its outputs."""
import logging
from dataclasses import asdict
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Optional, Tuple

from jinja2 import Template

from fitgrowth_core import __version__
from fitgrowth_core.config import Config, get_config

logger = logging.getLogger(__name__)

TEMPLATE_PATH = Path(__file__).parent / "templates" / "run_manifest.template.txt"
MANIFEST_NAME = "run_manifest.txt"


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _flatten(data: Mapping[str, Any], prefix: str = "") -> List[Tuple[str, str]]:
    items = []
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            items.extend(_flatten(value, f"{name}."))
        else:
            items.append((name, _format(value)))
    return items


def render_manifest(
    command: str,
    parameters: Mapping[str, Any],
    outputs: Iterable[Path],
    config: Optional[Config] = None,
) -> str:
    """Manifest text; keys and outputs are sorted and no clock value is recorded."""
    config = config or get_config()
    context = dict(
        command=command,
        version=__version__,
        parameters=sorted(_flatten(parameters)),
        config=sorted(_flatten(asdict(config))),
        outputs=sorted(Path(p).name for p in outputs),
    )
    if TEMPLATE_PATH.exists():
        return Template(TEMPLATE_PATH.read_text(encoding="utf-8"), keep_trailing_newline=True).render(**context)

    lines = ["# fitgrowth run manifest", f"command: {command}", f"version: {__version__}", ""]
    lines += [f"{k} = {v}" for k, v in context["parameters"] + context["config"]]
    lines += [""] + context["outputs"]
    return "\n".join(lines) + "\n"


def write_manifest(
    out_dir: Path,
    command: str,
    parameters: Mapping[str, Any],
    outputs: Iterable[Path],
    config: Optional[Config] = None,
) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    text = render_manifest(command, parameters, outputs, config)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    logger.info(f"Run manifest written to {path}")
    return path
