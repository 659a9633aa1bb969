"""CSV loading with raw string cells.

plotkit never recomputes physics; drawn values are CSV cells times a
declared scale factor. Keeping cells as the exact strings read from disk
is what lets the sidecar be byte-auditable against the source files, so
the table type stores strings and converts to float only at the edges.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyDataError, MissingColumnError, PlotkitError


@dataclass(frozen=True)
class Table:
    path: Path
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def index(self, name: str) -> int:
        try:
            return self.header.index(name)
        except ValueError:
            raise MissingColumnError(
                f"{self.path}: column {name!r} not in header "
                f"({', '.join(self.header)})"
            ) from None

    def column(self, name: str) -> list[str]:
        """Raw string cells of one column, in file order."""
        i = self.index(name)
        return [row[i] for row in self.rows]

    def floats(self, name: str) -> list[float]:
        return [float(cell) for cell in self.column(name)]

    def require(self, names) -> None:
        for name in names:
            self.index(name)


def load_table(path) -> Table:
    """Read a CSV into a Table; header-only or empty files are an error."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise EmptyDataError(f"{path}: file is empty") from None
        rows = tuple(tuple(row) for row in reader if row)
    if not rows:
        raise EmptyDataError(f"{path}: no data rows after the header")
    width = len(header)
    for k, row in enumerate(rows):
        if len(row) != width:
            raise PlotkitError(
                f"{path}: data row {k} has {len(row)} cells, header has "
                f"{width}"
            )
    return Table(path=path, header=header, rows=rows)
