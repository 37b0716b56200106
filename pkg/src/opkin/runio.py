"""Deterministic file I/O for simulation runs.

Output contract
---------------
CSV files open with a schema line, then one ``# key=value`` line per config
entry (sorted), then the column header, then the data rows::

    # schema=kinetic-trace v1
    # gamma=0.5
    # kappa=0.5
    t,mass,mean,variance,residual
    0.0,1.0,...

Floats are written with ``repr`` so a read-back reproduces the exact binary
values.  Nothing in the output depends on wall-clock time or the environment,
so reruns of the same configuration are byte-identical.

Config files use the same ``key=value`` format (``#`` comments, blank lines
ignored).  Unknown keys are a hard error: a typo must fail loudly rather than
silently run defaults.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
from pathlib import Path

import numpy as np

from .params import ParamError

__all__ = [
    "SCHEMA_VERSION",
    "format_value",
    "parse_config_text",
    "read_config",
    "coerce_config",
    "resolve_out_dir",
    "write_table",
    "write_csv",
    "read_csv",
    "write_summary",
    "rows_to_columns",
]

SCHEMA_VERSION = "v1"

OUT_DIR_ENV = "OPK_OUT_DIR"


def format_value(value) -> str:
    """Render one cell; floats keep full round-trip precision."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse key=value lines; '#' starts a comment, blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ParamError(f"config line {lineno}: empty key")
        if key in out:
            raise ParamError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read_config(path: str | Path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text())


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ParamError(f"expected a boolean, got {text!r}")


def coerce_config(raw: dict[str, str], schema: dict[str, type]) -> dict:
    """Convert raw string values against a {key: type} schema.

    Unknown keys raise ParamError.  Supported types: int, float, bool, str,
    and tuple (comma-separated floats).
    """
    out: dict = {}
    for key, text in raw.items():
        if key not in schema:
            known = ", ".join(sorted(schema))
            raise ParamError(f"unknown config key {key!r} (known keys: {known})")
        kind = schema[key]
        try:
            if kind is bool:
                out[key] = _parse_bool(text)
            elif kind is int:
                out[key] = int(text)
            elif kind is float:
                out[key] = float(text)
            elif kind is tuple:
                out[key] = tuple(float(v) for v in text.split(",") if v.strip())
            else:
                out[key] = text
        except ValueError as exc:
            raise ParamError(f"config key {key!r}: {exc}") from exc
    return out


def resolve_out_dir(configured: str | None) -> Path:
    """Output directory: OPK_OUT_DIR env var wins over the configured value."""
    env = os.environ.get(OUT_DIR_ENV)
    target = Path(env) if env else Path(configured) if configured else Path.cwd()
    target.mkdir(parents=True, exist_ok=True)
    return target


def rows_to_columns(rows: list) -> tuple[list[str], list[tuple]]:
    """Flatten a list of row dataclasses into (column names, value tuples).

    Enum values are written as their string value; array-valued fields are
    rejected (traces destined for CSV must be scalar per column).
    """
    if not rows:
        raise ParamError("cannot serialize an empty row list")
    names = [f.name for f in dataclasses.fields(rows[0])]
    data = []
    for row in rows:
        record = []
        for name in names:
            value = getattr(row, name)
            if isinstance(value, np.ndarray):
                raise ParamError(f"column {name!r} is array-valued")
            record.append(value)
        data.append(tuple(record))
    return names, data


def write_table(path: str | Path, schema_name: str, names: list[str],
                records: list[tuple], config: dict | None = None) -> Path:
    """Write explicit columns with the schema/config preamble."""
    lines = [f"# schema={schema_name} {SCHEMA_VERSION}"]
    for key in sorted(config or {}):
        lines.append(f"# {key}={format_value((config or {})[key])}")
    lines.append(",".join(names))
    for record in records:
        if len(record) != len(names):
            raise ParamError("row width does not match the column header")
        lines.append(",".join(format_value(v) for v in record))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_csv(path: str | Path, schema_name: str, rows: list,
              config: dict | None = None) -> Path:
    """Write rows (dataclass instances) with the schema/config preamble."""
    names, data = rows_to_columns(rows)
    return write_table(path, schema_name, names, data, config)


def read_csv(path: str | Path) -> tuple[str, dict[str, str], list[str], np.ndarray]:
    """Read a CSV written by write_csv.

    Returns (schema_name, config, column names, object array of cells).
    Numeric columns can be recovered with ``data[:, i].astype(float)``.
    """
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise ParamError(f"{path}: missing schema header line")
    schema_field = lines[0][len("# schema="):].strip()
    parts = schema_field.rsplit(" ", 1)
    if len(parts) != 2 or parts[1] != SCHEMA_VERSION:
        raise ParamError(f"{path}: unsupported schema {schema_field!r}")
    config: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if "=" in body:
            key, value = body.split("=", 1)
            config[key.strip()] = value.strip()
        i += 1
    if i >= len(lines):
        raise ParamError(f"{path}: missing column header")
    names = lines[i].split(",")
    data = [line.split(",") for line in lines[i + 1:] if line]
    return parts[0], config, names, np.array(data, dtype=object)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return dataclasses.asdict(value)
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    raise TypeError(f"cannot serialize {type(value)!r}")


def _sanitize(obj):
    """Replace non-finite floats with strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return repr(float(obj))
    return obj


def write_summary(path: str | Path, payload: dict) -> Path:
    """Write a summary JSON with sorted keys (byte-stable across reruns)."""
    path = Path(path)
    text = json.dumps(_sanitize(payload), indent=2, sort_keys=True,
                      default=_json_default)
    path.write_text(text + "\n")
    return path
