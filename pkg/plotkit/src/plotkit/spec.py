"""Figure specification.

A PanelSpec describes one population figure: the member CSVs (one panel
each), which columns every panel draws, per-column magnification factors,
shared axis ranges, and where the image goes. The CLI flags mirror these
fields one-to-one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple

from .errors import PlotkitError

FORMATS = ("png", "svg")


@dataclass(frozen=True)
class PanelSpec:
    csv_paths: Tuple[Path, ...]
    columns: Tuple[str, ...]
    out_path: Path
    magnifications: Mapping[str, float] = field(default_factory=dict)
    x_column: str = "t_fs"
    xlim: Optional[Tuple[float, float]] = None
    ylim: Optional[Tuple[float, float]] = None
    fmt: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "csv_paths",
                           tuple(Path(p) for p in self.csv_paths))
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "out_path", Path(self.out_path))
        if not self.csv_paths:
            raise PlotkitError("PanelSpec needs at least one input CSV")
        if not self.columns:
            raise PlotkitError("PanelSpec needs at least one column to draw")
        unknown = set(self.magnifications) - set(self.columns)
        if unknown:
            raise PlotkitError(
                "magnification given for columns that are not drawn: "
                + ", ".join(sorted(unknown))
            )

    def scale(self, column: str) -> float:
        return float(self.magnifications.get(column, 1.0))

    @property
    def format(self) -> str:
        return resolve_format(self.out_path, self.fmt)


def resolve_format(out_path: Path, fmt: Optional[str]) -> str:
    suffix = Path(out_path).suffix.lower().lstrip(".")
    if fmt is None:
        if suffix in FORMATS:
            return suffix
        raise PlotkitError(
            f"cannot infer image format from {out_path}; use one of "
            f"{'/'.join(FORMATS)} as the suffix or pass an explicit format"
        )
    fmt = fmt.lower()
    if fmt not in FORMATS:
        raise PlotkitError(f"unsupported format {fmt!r}; use "
                           f"{'/'.join(FORMATS)}")
    if suffix in FORMATS and suffix != fmt:
        raise PlotkitError(
            f"output suffix .{suffix} contradicts requested format {fmt}"
        )
    return fmt


def default_layout(n_panels: int) -> Tuple[int, int]:
    """Near-square grid: 1 -> 1x1, 2 -> 1x2, 4 -> 2x2, 6 -> 2x3."""
    cols = 1
    while cols * cols < n_panels:
        cols += 1
    rows = (n_panels + cols - 1) // cols
    return rows, cols


def check_layout(layout: Sequence[int], n_panels: int) -> Tuple[int, int]:
    rows, cols = int(layout[0]), int(layout[1])
    if rows < 1 or cols < 1:
        raise PlotkitError(f"layout {rows}x{cols} is not a grid")
    if rows * cols < n_panels:
        raise PlotkitError(
            f"layout {rows}x{cols} cannot hold {n_panels} panels"
        )
    return rows, cols
