"""Table and manifest files.

Tables are comma-separated with a leading ``# schema: <name>/<version>``
comment line and one header row. Floats are written with ``repr`` so that a
table read back reproduces the numbers bit for bit. Manifests are JSON.
"""

from __future__ import annotations

import csv
import json
import platform
import time
from importlib import metadata
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def format_table(rows: list[dict], schema: str) -> str:
    if not rows:
        raise ValueError("cannot write an empty table")
    columns = list(rows[0])
    lines = [f"# schema: orderlab.{schema}/{SCHEMA_VERSION}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def write_table(rows: list[dict], path, schema: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_table(rows, schema), encoding="utf-8")
    return path


def _parse(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path) -> tuple[str, list[dict]]:
    """Return ``(schema, rows)``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# schema: "):
        raise ValueError(f"{path}: missing schema header")
    schema = lines[0][len("# schema: ") :]
    reader = csv.DictReader(lines[1:])
    return schema, [{k: _parse(v) for k, v in row.items()} for row in reader]


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(
    path, *, command: str, config: dict, tolerances: dict, outputs: list[str], wall_time: float, extra: dict | None = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema": f"orderlab.manifest/{SCHEMA_VERSION}",
        "command": command,
        "config": config,
        "tolerances": tolerances,
        "outputs": outputs,
        "software": {"orderlab": package_version(), "python": platform.python_version()},
        "wall_time_s": wall_time,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")
    return path
