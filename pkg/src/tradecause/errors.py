"""Exception hierarchy shared across the package.

Everything raised on bad data or bad queries derives from TradecauseError so
callers (and the CLI) can distinguish domain failures from programming bugs.
"""


class TradecauseError(Exception):
    """Base class for all domain errors."""


class UnknownNodeError(TradecauseError):
    """A variable name is not part of the graph or data at hand."""


class CycleError(TradecauseError):
    """Edges form a directed cycle."""


class ExogeneityError(TradecauseError):
    """An edge points into an interventional (exogenous) variable."""


class SchemaError(TradecauseError):
    """A file or table does not match the declared study layout."""


class ParseError(TradecauseError):
    """A cell or field could not be parsed as the expected type."""


class RangeError(TradecauseError):
    """A value lies outside its admissible range."""


class ConfigError(TradecauseError):
    """An invalid configuration object."""


class EmptyGroupError(TradecauseError):
    """A group required by a fairness metric contains no rows."""


class DivisionByZeroError(TradecauseError):
    """A rate ratio with a zero denominator."""


class InsufficientRowsError(TradecauseError):
    """Too few rows for the requested computation."""


class NumericalError(TradecauseError):
    """A numerically degenerate computation (non-positive determinant etc.)."""


class NodeSetMismatchError(TradecauseError):
    """Two graphs over different variable sets were compared."""


class InvalidAdjustmentError(TradecauseError):
    """The requested adjustment set is not usable for identification."""


class DegenerateTreatmentError(TradecauseError):
    """Treatment has (near-)zero residual variance after adjustment."""


class ExtrapolationError(TradecauseError):
    """A conditional-mean query outside the observed support."""


class RankError(TradecauseError):
    """A regression design matrix is rank deficient."""


class MixedPairError(TradecauseError):
    """Aggregation was asked to combine analyses of different metric pairs."""
