"""Figure rendering from simulator CSV output.

Three operations, all batch, all deterministic for fixed inputs:

- :func:`plot_populations` — one multi-panel population-dynamics figure
  from one or more member CSVs (e.g. four sweep members as a 2x2 grid),
  with per-column magnification factors stated in the legend;
- :func:`plot_surfaces` — the three polariton branches versus R, with an
  optional zoom inset over a narrow avoided crossing;
- :func:`plot_summary` — one sweep-summary quantity versus the swept
  parameter.

Every invocation also writes a `<name>.data.csv` sidecar holding the
exact arrays drawn (see :mod:`plotkit.sidecar`); nothing is ever drawn
that is not a source CSV cell times a declared scale factor. All input
validation happens before any output file is opened, so a failed call
leaves nothing behind.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import sidecar as sc  # noqa: E402
from .errors import PlotkitError, WindowError  # noqa: E402
from .spec import (  # noqa: E402
    PanelSpec,
    check_layout,
    default_layout,
    resolve_format,
)
from .table import Table, load_table  # noqa: E402

# stable ids inside SVG output; Agg PNG carries no timestamp
plt.rcParams["svg.hashsalt"] = "plotkit"

DPI = 150

SURFACE_X = "R_bohr"
SURFACE_BRANCHES = ("E_lower", "E_middle", "E_upper")
CROSSING_POSITION = "r_star_bohr"
CROSSING_GAP = "gap_ha"


@dataclass(frozen=True)
class PanelReport:
    source: str
    labels: Tuple[str, ...]
    n_rows: int


@dataclass(frozen=True)
class RenderReport:
    out_path: Path
    sidecar_path: Path
    panels: Tuple[PanelReport, ...]
    xlim: Optional[Tuple[float, float]] = None
    ylim: Optional[Tuple[float, float]] = None
    inset_window: Optional[Tuple[float, float]] = None


def _image_metadata(fmt: str) -> dict:
    if fmt == "svg":
        return {"Date": None}  # drop the creation timestamp
    return {"Software": "plotkit"}


def _panel_title(path: Path) -> str:
    """A short deterministic tag: the parent directory for the standard
    per-member `populations.csv` layout, otherwise the file stem."""
    if path.stem == "populations" and path.parent.name not in ("", "."):
        return path.parent.name
    return path.stem


def _save(fig, out_path: Path, fmt: str) -> None:
    fig.savefig(out_path, format=fmt, dpi=DPI, metadata=_image_metadata(fmt))
    plt.close(fig)


def _curve_label(column: str, scale: float) -> str:
    if scale == 1.0:
        return column
    return f"{column} ×{scale:g}"


def plot_populations(spec: PanelSpec, layout=None) -> RenderReport:
    """Render one multi-panel population figure plus its data sidecar."""
    fmt = spec.format  # validates path/format before any I/O
    tables = [load_table(p) for p in spec.csv_paths]
    for table in tables:
        table.require((spec.x_column,) + spec.columns)

    n_panels = len(tables)
    if layout is None:
        rows, cols = default_layout(n_panels)
    else:
        rows, cols = check_layout(layout, n_panels)

    entries = []
    panel_reports = []
    fig, axes = plt.subplots(
        rows, cols, figsize=(4.2 * cols, 3.0 * rows),
        squeeze=False, layout="constrained", sharex=True, sharey=True,
    )
    flat = [ax for row in axes for ax in row]
    for k, (table, ax) in enumerate(zip(tables, flat)):
        x = sc.scaled_values(table.column(spec.x_column), 1.0)
        entries.append(sc.SidecarEntry(
            panel=str(k), source=str(table.path), column=spec.x_column,
            scale=1.0, values=x,
        ))
        labels = []
        for column in spec.columns:
            scale = spec.scale(column)
            y = sc.scaled_values(table.column(column), scale)
            entries.append(sc.SidecarEntry(
                panel=str(k), source=str(table.path), column=column,
                scale=scale, values=y,
            ))
            label = _curve_label(column, scale)
            labels.append(label)
            ax.plot(x, y, label=label, linewidth=1.2)
        ax.set_title(_panel_title(table.path), fontsize="medium")
        if spec.xlim is not None:
            ax.set_xlim(*spec.xlim)
        if spec.ylim is not None:
            ax.set_ylim(*spec.ylim)
        if k // cols == rows - 1:
            ax.set_xlabel(spec.x_column)
        if k % cols == 0:
            ax.set_ylabel("population")
        ax.legend(loc="upper right", fontsize="small", frameon=False)
        panel_reports.append(PanelReport(
            source=str(table.path), labels=tuple(labels),
            n_rows=table.n_rows,
        ))
    for ax in flat[n_panels:]:
        ax.set_axis_off()

    _save(fig, spec.out_path, fmt)
    side = sc.write_sidecar(sc.sidecar_path(spec.out_path), entries)
    return RenderReport(
        out_path=spec.out_path, sidecar_path=side,
        panels=tuple(panel_reports), xlim=spec.xlim, ylim=spec.ylim,
    )


def _crossing_center(crossings: Table) -> Tuple[float, int]:
    """R* of the narrowest reported crossing (the zoom-worthy one) and
    its row index in the crossings CSV."""
    gaps = crossings.floats(CROSSING_GAP)
    rs = crossings.floats(CROSSING_POSITION)
    narrowest = min(range(len(gaps)), key=gaps.__getitem__)
    return rs[narrowest], narrowest


def _window_rows(r: Sequence[float], window) -> list:
    lo, hi = window
    return [i for i, v in enumerate(r) if lo <= v <= hi]


def plot_surfaces(
    surfaces_csv,
    out_path,
    inset_window: Optional[Tuple[float, float]] = None,
    crossings_csv=None,
    inset_half_width: float = 0.25,
    fmt: Optional[str] = None,
) -> RenderReport:
    """Render the three-branch surface plot plus its data sidecar.

    The inset window is either given explicitly or centered on the R* of
    the narrowest crossing in `crossings_csv` (clipped to the data
    range). An explicit window that does not lie inside the data range
    raises WindowError before anything is written.
    """
    out_path = Path(out_path)
    fmt = resolve_format(out_path, fmt)
    table = load_table(surfaces_csv)
    table.require((SURFACE_X,) + SURFACE_BRANCHES)
    r = table.floats(SURFACE_X)
    r_lo, r_hi = min(r), max(r)

    crossings = None
    r_star = None
    star_row = None
    if crossings_csv is not None:
        crossings = load_table(crossings_csv)
        crossings.require((CROSSING_POSITION, CROSSING_GAP))

    if inset_window is not None:
        lo, hi = float(inset_window[0]), float(inset_window[1])
        if not lo < hi:
            raise WindowError(f"inset window ({lo}, {hi}) is empty")
        if lo < r_lo or hi > r_hi:
            raise WindowError(
                f"inset window ({lo}, {hi}) lies outside the data range "
                f"({r_lo}, {r_hi})"
            )
        window = (lo, hi)
    elif crossings is not None:
        r_star, star_row = _crossing_center(crossings)
        window = (max(r_star - inset_half_width, r_lo),
                  min(r_star + inset_half_width, r_hi))
    else:
        window = None

    entries = []
    branch_values = {}
    for column in (SURFACE_X,) + SURFACE_BRANCHES:
        values = sc.scaled_values(table.column(column), 1.0)
        branch_values[column] = values
        entries.append(sc.SidecarEntry(
            panel="main", source=str(table.path), column=column,
            scale=1.0, values=values,
        ))

    fig, ax = plt.subplots(figsize=(6.0, 4.2), layout="constrained")
    x = branch_values[SURFACE_X]
    for column in SURFACE_BRANCHES:
        ax.plot(x, branch_values[column],
                label=column.removeprefix("E_"), linewidth=1.2)
    ax.set_xlabel(SURFACE_X)
    ax.set_ylabel("energy (hartree)")
    ax.legend(loc="upper right", fontsize="small", frameon=False)

    labels = [c.removeprefix("E_") for c in SURFACE_BRANCHES]
    if window is not None:
        keep = _window_rows(x, window)
        ins = ax.inset_axes([0.52, 0.08, 0.45, 0.45])
        entries.append(sc.SidecarEntry(
            panel="inset", source=str(table.path), column=SURFACE_X,
            scale=1.0, values=tuple(x[i] for i in keep),
            row_indices=tuple(keep),
        ))
        for column in SURFACE_BRANCHES:
            values = [branch_values[column][i] for i in keep]
            ins.plot([x[i] for i in keep], values, linewidth=1.0)
            entries.append(sc.SidecarEntry(
                panel="inset", source=str(table.path), column=column,
                scale=1.0, values=tuple(values), row_indices=tuple(keep),
            ))
        if r_star is not None:
            ins.axvline(r_star, color="0.4", linestyle=":", linewidth=0.8)
            entries.append(sc.SidecarEntry(
                panel="inset", source=str(crossings.path),
                column=CROSSING_POSITION, scale=1.0, values=(r_star,),
                row_indices=(star_row,),
            ))
        ins.set_xlim(*window)
        ins.tick_params(labelsize="x-small")
        ax.indicate_inset_zoom(ins, edgecolor="0.4")

    _save(fig, out_path, fmt)
    side = sc.write_sidecar(sc.sidecar_path(out_path), entries)
    return RenderReport(
        out_path=out_path, sidecar_path=side,
        panels=(PanelReport(source=str(table.path), labels=tuple(labels),
                            n_rows=table.n_rows),),
        inset_window=window,
    )


def plot_summary(
    summary_csv,
    out_path,
    column: str = "peak_p_mol",
    x_column: Optional[str] = None,
    fmt: Optional[str] = None,
) -> RenderReport:
    """Render one summary quantity against the swept parameter.

    The x column defaults to the second header field (the sweep writes
    `member,<param>,...`). Rows where either cell is empty — failed sweep
    members leave their metric cells blank — are skipped; the sidecar
    records the surviving rows under their original row indices.
    """
    out_path = Path(out_path)
    fmt = resolve_format(out_path, fmt)
    table = load_table(summary_csv)
    if x_column is None:
        if len(table.header) < 2:
            raise PlotkitError(
                f"{table.path}: cannot infer the parameter column from a "
                f"{len(table.header)}-column header"
            )
        x_column = table.header[1]
    table.require((x_column, column))

    xs_raw = table.column(x_column)
    ys_raw = table.column(column)
    keep = [i for i in range(table.n_rows)
            if xs_raw[i].strip() != "" and ys_raw[i].strip() != ""]
    if not keep:
        raise PlotkitError(
            f"{table.path}: no rows with values in both {x_column!r} "
            f"and {column!r}"
        )
    xs = tuple(float(xs_raw[i]) for i in keep)
    ys = tuple(float(ys_raw[i]) for i in keep)

    fig, ax = plt.subplots(figsize=(4.8, 3.4), layout="constrained")
    ax.plot(xs, ys, marker="o", linewidth=1.2)
    ax.set_xlabel(x_column)
    ax.set_ylabel(column)
    _save(fig, out_path, fmt)

    entries = [
        sc.SidecarEntry(panel="0", source=str(table.path), column=x_column,
                        scale=1.0, values=xs, row_indices=tuple(keep)),
        sc.SidecarEntry(panel="0", source=str(table.path), column=column,
                        scale=1.0, values=ys, row_indices=tuple(keep)),
    ]
    side = sc.write_sidecar(sc.sidecar_path(out_path), entries)
    return RenderReport(
        out_path=out_path, sidecar_path=side,
        panels=(PanelReport(source=str(table.path), labels=(column,),
                            n_rows=len(keep)),),
    )
