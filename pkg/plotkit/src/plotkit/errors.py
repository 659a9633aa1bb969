"""Error types for plotkit.

Every failure the renderer can anticipate raises a subclass of
PlotkitError so callers (and the CLI) can catch one type; the specific
classes below give tests and scripts something precise to assert on.
"""


class PlotkitError(Exception):
    """Base class for all plotkit errors."""


class MissingColumnError(PlotkitError):
    """A requested column is not present in the CSV header."""


class EmptyDataError(PlotkitError):
    """The CSV has no data rows (missing or header-only file body)."""


class WindowError(PlotkitError):
    """An inset window does not lie inside the data range."""
