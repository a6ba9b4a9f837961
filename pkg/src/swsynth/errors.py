"""Exception types shared across the package."""


class SynthError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(SynthError):
    """Schema declaration and CSV header do not agree."""


class DataError(SynthError):
    """A cell or row cannot be interpreted under the declared schema."""


class DatasetError(SynthError):
    """The dataset as a whole is unusable (empty, zero rows, ...)."""


class ConfigError(SynthError):
    """Invalid run configuration or operation parameters."""


class BudgetError(SynthError):
    """A release would exceed the configured privacy budget."""


class MetricError(SynthError):
    """A metric is undefined on the given inputs (degenerate denominator)."""
