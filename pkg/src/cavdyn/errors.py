"""Exception hierarchy. Each class carries the process exit code the CLI maps it to."""


class CavdynError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(CavdynError):
    """Invalid, missing, or contradictory configuration input."""

    exit_code = 1


class NumericsError(CavdynError):
    """Numerical failure: norm blow-up, non-convergence, diagonalization trouble."""

    exit_code = 2


class OutputError(CavdynError):
    """Filesystem / serialization failure while writing results."""

    exit_code = 3
