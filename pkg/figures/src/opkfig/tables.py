"""Reader for the simulator's versioned CSV tables.

Files open with a ``# schema=<name> v<version>`` line, followed by one
``# key=value`` line per resolved configuration entry, a header row, and
plain CSV data.  The reader validates the schema name and version and makes
columns available by name; anything malformed or missing is a hard error.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SUPPORTED_VERSION = "v1"


class TableError(Exception):
    """Input table cannot be used: bad schema, empty, or missing columns."""


@dataclass(frozen=True)
class Table:
    """One parsed CSV table."""

    path: str
    schema: str
    config: dict[str, str] = field(repr=False)
    names: list[str] = field(repr=False)
    cells: np.ndarray = field(repr=False)  # object array, shape (rows, cols)

    def column(self, name: str, numeric: bool = True) -> np.ndarray:
        if name not in self.names:
            raise TableError(
                f"{self.path}: missing column {name!r} in schema {self.schema!r} "
                f"(has {', '.join(self.names)})")
        raw = self.cells[:, self.names.index(name)]
        if not numeric:
            return raw.astype(str)
        try:
            return raw.astype(float)
        except ValueError as exc:
            raise TableError(f"{self.path}: column {name!r} is not numeric: {exc}")

    def rows_where(self, name: str, value: str) -> "Table":
        keep = self.column(name, numeric=False) == value
        return Table(self.path, self.schema, self.config, self.names,
                     self.cells[keep])


def read_table(path: str | Path, expect_schema: str) -> Table:
    """Parse and validate one CSV file against the expected schema name."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise TableError(f"cannot read {path}: {exc}")
    if not lines or not lines[0].startswith("# schema="):
        raise TableError(f"{path}: missing '# schema=' header line")
    schema_field = lines[0][len("# schema="):].strip()
    parts = schema_field.rsplit(" ", 1)
    if len(parts) != 2:
        raise TableError(f"{path}: malformed schema line {schema_field!r}")
    schema, version = parts
    if version != SUPPORTED_VERSION:
        raise TableError(f"{path}: schema version {version!r} not supported "
                         f"(expected {SUPPORTED_VERSION})")
    if schema != expect_schema:
        raise TableError(f"{path}: schema mismatch: file has {schema!r}, "
                         f"this figure kind needs {expect_schema!r}")
    config: dict[str, str] = {}
    body = 1
    for body in range(1, len(lines)):
        line = lines[body]
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition("=")
        config[key] = value
    else:
        body = len(lines)
    data_lines = [ln for ln in lines[body:] if ln.strip()]
    if not data_lines:
        raise TableError(f"{path}: empty table (no header row)")
    reader = csv.reader(io.StringIO("\n".join(data_lines)))
    rows = list(reader)
    names = rows[0]
    if len(rows) == 1:
        raise TableError(f"{path}: empty table")
    width = len(names)
    for r in rows[1:]:
        if len(r) != width:
            raise TableError(f"{path}: ragged row {r!r}")
    cells = np.array(rows[1:], dtype=object)
    return Table(str(path), schema, config, names, cells)


def read_summary(path: str | Path) -> dict:
    """Parse a summary.json companion file."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise TableError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise TableError(f"{path}: invalid JSON: {exc}")
