"""Laser-driven coupled atom-molecule-cavity wavepacket dynamics.

Public surface:

- configuration: :func:`load_config`, :func:`parse_config`, and the
  resolved-document echo;
- model assembly: :func:`build_model`, :func:`build_basis`,
  :func:`initial_state`;
- time evolution: :func:`propagate.propagate` (submodule),
  :func:`field_free_propagate`;
- observables: :func:`channel_populations`, :func:`vibrational_projection`,
  :func:`diagnostics`;
- statics: :func:`polariton_surfaces`, :func:`locate_avoided_crossings`;
- validation: :func:`oracle_propagate` (continuous-x photon representation).
"""

__version__ = "0.1.0"

from .config import (
    SimulationConfig,
    echo,
    load_config,
    parse_config,
)
from .errors import CavdynError, ConfigError, NumericsError, OutputError
from .grids import (
    PotentialCurve,
    RGrid,
    VibrationalLadder,
    make_grid,
    morse_curve,
    vibrational_eigenstates,
)
from .observables import (
    DiagnosticsSummary,
    PopulationSnapshot,
    channel_populations,
    diagnostics,
    vibrational_projection,
)
from .polariton import (
    CrossingReport,
    PolaritonCurves,
    locate_avoided_crossings,
    polariton_surfaces,
)
# NOTE: the driver function `propagate` is deliberately not re-exported
# here: it would shadow the `cavdyn.propagate` submodule attribute and
# make `from cavdyn import propagate` mean two different things depending
# on import order. Use `from cavdyn.propagate import propagate`.
from .propagate import (
    TrajectoryRecord,
    field_free_propagate,
)
from .system import (
    ChannelBasis,
    HamiltonianModel,
    build_basis,
    build_model,
    envelope_field,
    initial_state,
)
from .xspace import XGridState, fock_to_x, oracle_propagate, x_to_fock

__all__ = [
    "CavdynError",
    "ChannelBasis",
    "ConfigError",
    "CrossingReport",
    "DiagnosticsSummary",
    "HamiltonianModel",
    "NumericsError",
    "OutputError",
    "PolaritonCurves",
    "PopulationSnapshot",
    "PotentialCurve",
    "RGrid",
    "SimulationConfig",
    "TrajectoryRecord",
    "VibrationalLadder",
    "XGridState",
    "__version__",
    "build_basis",
    "build_model",
    "channel_populations",
    "diagnostics",
    "echo",
    "envelope_field",
    "field_free_propagate",
    "fock_to_x",
    "initial_state",
    "load_config",
    "locate_avoided_crossings",
    "make_grid",
    "morse_curve",
    "oracle_propagate",
    "parse_config",
    "polariton_surfaces",
    "vibrational_eigenstates",
    "vibrational_projection",
    "x_to_fock",
]
