"""Figure rendering for simulator CSV output.

Consumes the CSV files the simulator CLI writes (population
trajectories, polariton surfaces, crossing reports, sweep summaries) and
renders publication-style panels. Never recomputes physics: every drawn
value is a CSV cell times a declared scale factor, and each figure comes
with a machine-readable sidecar of the exact arrays drawn.
"""

__version__ = "0.1.0"

from .errors import (
    EmptyDataError,
    MissingColumnError,
    PlotkitError,
    WindowError,
)
from .render import (
    PanelReport,
    RenderReport,
    plot_populations,
    plot_summary,
    plot_surfaces,
)
from .sidecar import sidecar_path
from .spec import PanelSpec
from .table import Table, load_table

__all__ = [
    "EmptyDataError",
    "MissingColumnError",
    "PanelReport",
    "PanelSpec",
    "PlotkitError",
    "RenderReport",
    "Table",
    "WindowError",
    "__version__",
    "load_table",
    "plot_populations",
    "plot_summary",
    "plot_surfaces",
    "sidecar_path",
]
