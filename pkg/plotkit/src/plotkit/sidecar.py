"""Machine-readable record of exactly what a figure draws.

Every plot invocation writes `<out>.data.csv` next to the image. Each
data row holds one drawn value: the source CSV cell parsed as a float,
multiplied by the declared scale factor, and formatted with %.12g — the
same format the simulator uses for its CSV cells, so an unscaled column
round-trips byte-identically. Figures are therefore auditable without
any image parsing: re-deriving the sidecar from the source CSVs must
reproduce it byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple

HEADER = ("panel", "source", "column", "scale", "row", "value")
CELL_FORMAT = ".12g"


def fmt(value: float) -> str:
    return format(float(value), CELL_FORMAT)


@dataclass(frozen=True)
class SidecarEntry:
    """One drawn array: `values` are floats exactly as plotted."""

    panel: str
    source: str
    column: str
    scale: float
    values: Tuple[float, ...]
    row_indices: Tuple[int, ...] = ()

    def rows(self):
        indices = self.row_indices or range(len(self.values))
        scale_txt = fmt(self.scale)
        for idx, value in zip(indices, self.values):
            yield (self.panel, self.source, self.column, scale_txt,
                   str(idx), fmt(value))


def sidecar_path(out_path) -> Path:
    out_path = Path(out_path)
    return out_path.with_name(out_path.stem + ".data.csv")


def write_sidecar(path, entries: Sequence[SidecarEntry]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for entry in entries:
            writer.writerows(entry.rows())
    return path


def scaled_values(cells: Sequence[str], scale: float) -> Tuple[float, ...]:
    """The drawn array for a column: cell x scale, nothing else."""
    return tuple(float(cell) * scale for cell in cells)
