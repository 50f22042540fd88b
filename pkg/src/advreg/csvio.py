"""CSV + manifest output with a bit-exact, self-describing dialect.

Tables are comma-separated UTF-8 with LF line endings and ``.`` decimals.
Lines at the top prefixed ``# `` carry metadata as ``key<space>JSON`` pairs
(compact, key-sorted JSON), so every file records the configuration that
produced it and a reader can reproduce the run from the header alone.
Floats are written with ``repr`` (shortest round-trip form) and NaN cells
are written empty, so rewriting the same data yields byte-identical files.
A directory of tables gets a ``manifest.json`` sidecar with the SHA-256 and
size of each file (no timestamps, same bit-exactness contract).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "MANIFEST_NAME",
    "METADATA_PREFIX",
    "ParsedTable",
    "file_sha256",
    "format_cell",
    "read_table",
    "render_table",
    "write_manifest",
    "write_table",
]

METADATA_PREFIX = "# "
MANIFEST_NAME = "manifest.json"


def format_cell(value) -> str:
    """Render one cell: repr-exact floats, empty for NaN/None, JSON booleans."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "" if math.isnan(value) else repr(value)
    if isinstance(value, str):
        return value
    raise TypeError(f"cannot format a {type(value).__name__} cell")


def _metadata_lines(metadata: Mapping[str, object]) -> list[str]:
    lines = []
    for key in metadata:
        if not key or any(ch.isspace() for ch in key):
            raise ValueError(f"metadata key {key!r} must be non-empty and without whitespace")
        payload = json.dumps(metadata[key], sort_keys=True, separators=(",", ":"), allow_nan=False)
        lines.append(f"{METADATA_PREFIX}{key} {payload}")
    return lines


def render_table(
    columns: Sequence[str],
    rows: Iterable[Mapping[str, object]],
    metadata: Optional[Mapping[str, object]] = None,
) -> str:
    """The full text of a table file (metadata, header, then data rows)."""
    if not columns:
        raise ValueError("a table needs at least one column")
    if len(set(columns)) != len(columns):
        raise ValueError("column names must be unique")
    buf = io.StringIO()
    for line in _metadata_lines(metadata or {}):
        buf.write(line)
        buf.write("\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        missing = [c for c in columns if c not in row]
        if missing:
            raise ValueError(f"row is missing columns {missing}")
        writer.writerow([format_cell(row[c]) for c in columns])
    return buf.getvalue()


def write_table(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Mapping[str, object]],
    metadata: Optional[Mapping[str, object]] = None,
) -> None:
    """Write a table file; same inputs produce byte-identical output."""
    text = render_table(columns, rows, metadata)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


@dataclass
class ParsedTable:
    """A table read back: its metadata, column order, and string cells."""

    metadata: dict
    column_names: list[str]
    columns: dict[str, list[str]]

    @property
    def n_rows(self) -> int:
        return len(self.columns[self.column_names[0]]) if self.column_names else 0

    def numeric(self, name: str) -> np.ndarray:
        """One column as floats; empty cells become NaN."""
        cells = self.columns[name]
        return np.array([math.nan if cell == "" else float(cell) for cell in cells], dtype=float)

    def rows(self) -> list[dict[str, str]]:
        return [
            {name: self.columns[name][i] for name in self.column_names} for i in range(self.n_rows)
        ]


def read_table(path: str) -> ParsedTable:
    """Parse a table file written by write_table (metadata + header + rows)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        text = f.read()
    lines = text.split("\n")
    metadata: dict = {}
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith(METADATA_PREFIX.rstrip()):
            body_start = i
            break
        payload = line[len(METADATA_PREFIX) :] if line.startswith(METADATA_PREFIX) else ""
        key, _, raw = payload.partition(" ")
        if not key or not raw:
            raise ValueError(f"{path}: malformed metadata line {i + 1}: {line!r}")
        try:
            metadata[key] = json.loads(raw)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: metadata line {i + 1} is not JSON: {err}") from err
    else:
        raise ValueError(f"{path}: no header row found")
    body = [line for line in lines[body_start:] if line != ""]
    reader = csv.reader(body)
    parsed = list(reader)
    if not parsed:
        raise ValueError(f"{path}: no header row found")
    names = parsed[0]
    if len(set(names)) != len(names) or any(not n for n in names):
        raise ValueError(f"{path}: header columns must be unique and non-empty")
    columns: dict[str, list[str]] = {name: [] for name in names}
    for r, cells in enumerate(parsed[1:], start=2):
        if len(cells) != len(names):
            raise ValueError(f"{path}: row {r} has {len(cells)} cells, expected {len(names)}")
        for name, cell in zip(names, cells):
            columns[name].append(cell)
    return ParsedTable(metadata, names, columns)


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(directory: str, file_names: Sequence[str], extra: Optional[Mapping[str, object]] = None) -> str:
    """Write `manifest.json` listing each file's SHA-256 and size.

    The manifest is deterministic: sorted keys, no timestamps.  Returns the
    manifest path.
    """
    files = {}
    for name in file_names:
        path = os.path.join(directory, name)
        files[name] = {"sha256": file_sha256(path), "bytes": os.path.getsize(path)}
    manifest: dict = {"files": files}
    for key, value in (extra or {}).items():
        if key == "files":
            raise ValueError("manifest extra data cannot override 'files'")
        manifest[key] = value
    out_path = os.path.join(directory, MANIFEST_NAME)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        f.write(json.dumps(manifest, indent=2, sort_keys=True, allow_nan=False))
        f.write("\n")
    return out_path
