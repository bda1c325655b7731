"""Exception types shared across the package.

Plain argument problems (bad dimensions, out-of-range values) raise the
built-in ValueError; these classes cover failures a caller may want to
catch and handle separately.
"""


class FlightStatError(Exception):
    """Base class for package-specific errors."""


class SchemaError(FlightStatError):
    """Input CSV header is missing a mandatory column."""


class EmptyDatasetError(FlightStatError):
    """An operation that needs data received none (or too little)."""


class InsufficientDataError(FlightStatError):
    """Not enough known values to carry out the computation."""


class SingularDesignError(FlightStatError):
    """Normal matrix of a least-squares fit is (near-)singular."""

    def __init__(self, message: str, columns: list[str] | None = None):
        super().__init__(message)
        self.columns = columns or []


class UndefinedVarianceError(FlightStatError):
    """R-squared requested for a constant target vector."""


class DegreesOfFreedomError(FlightStatError):
    """Adjusted R-squared requested with n <= k + 1."""


class EncodingError(FlightStatError):
    """A categorical value has no code and the unknown bucket is disabled."""


class NotFoundError(FlightStatError):
    """Lookup of a stored entity (flight, model, session) failed."""


class UnknownVersionError(FlightStatError):
    """Persisted document carries an unrecognized schema version."""


class CorruptDocumentError(FlightStatError):
    """Persisted document failed to parse or violates invariants."""


class SessionClosedError(FlightStatError):
    """An utterance was posted to a closed dialog session."""
