"""Reader for the data-series CSV dialect.

The dialect is the advreg CLI's output contract: UTF-8, LF line endings,
comma-separated cells with ``.`` decimals, and a block of ``#``-prefixed
metadata lines before the header, each of the form ``# key <json>``.
Numeric cells are ``repr`` floats; empty cells mean "not available".
This module reads that format and nothing else — it never touches the
producing library.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path


class DialectError(ValueError):
    """A file does not conform to the CSV dialect."""


@dataclass(frozen=True)
class Table:
    """One parsed CSV: metadata mapping, header, and string-cell rows."""

    path: str
    metadata: dict
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def column(self, name: str) -> list[str]:
        try:
            idx = self.header.index(name)
        except ValueError:
            raise KeyError(f"{self.path}: no column {name!r}") from None
        return [row[idx] for row in self.rows]

    def floats(self, name: str) -> list[float]:
        """Column as floats; empty cells become NaN."""
        out = []
        for cell in self.column(name):
            if cell == "":
                out.append(math.nan)
            else:
                try:
                    out.append(float(cell))
                except ValueError:
                    raise DialectError(
                        f"{self.path}: column {name!r} has non-numeric cell {cell!r}"
                    ) from None
        return out

    def has_column(self, name: str) -> bool:
        return name in self.header

    @property
    def panel(self) -> dict:
        meta = self.metadata.get("panel")
        if not isinstance(meta, dict):
            raise DialectError(f"{self.path}: missing or malformed 'panel' metadata")
        return meta


def read_table(path: str | Path) -> Table:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DialectError(f"cannot read {path}: {exc}") from None
    except UnicodeDecodeError as exc:
        raise DialectError(f"{path} is not UTF-8: {exc}") from None

    metadata: dict = {}
    header: tuple[str, ...] | None = None
    rows: list[tuple[str, ...]] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line == "" and lineno == text.count("\n") + 1:
            continue  # trailing newline
        if line.startswith("#"):
            if header is not None:
                raise DialectError(f"{path}: metadata line {lineno} appears after the header")
            body = line[1:].strip()
            key, _, payload = body.partition(" ")
            if not key or not payload:
                raise DialectError(f"{path}: metadata line {lineno} is not '# key <json>'")
            try:
                metadata[key] = json.loads(payload)
            except json.JSONDecodeError as exc:
                raise DialectError(f"{path}: metadata line {lineno} has bad JSON: {exc}") from None
            continue
        cells = tuple(line.split(","))
        if header is None:
            if any(cell == "" for cell in cells):
                raise DialectError(f"{path}: header on line {lineno} has an empty column name")
            header = cells
            continue
        if len(cells) != len(header):
            raise DialectError(
                f"{path}: line {lineno} has {len(cells)} cells, expected {len(header)}"
            )
        rows.append(cells)
    if header is None:
        raise DialectError(f"{path}: no header line found")
    return Table(path=str(path), metadata=metadata, header=header, rows=tuple(rows))
