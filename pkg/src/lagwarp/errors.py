"""Exception types shared across the package.

The CLI maps these classes onto distinct exit codes, so library code raises
the most specific one that applies.
"""


class DomainError(ValueError):
    """A parameter or input value lies outside its mathematically valid range."""


class ShapeError(ValueError):
    """Array dimensions violate a layer or network contract."""


class EmptyDataError(ValueError):
    """An operation that needs at least one observed target received none."""


class ParseError(ValueError):
    """A data file violates the expected format; the message names the row."""


class WeightsFormatError(ValueError):
    """A weights file is structurally invalid or has an unsupported version."""


class UnsupportedLayerError(TypeError):
    """An operation was applied to a layer type it is not defined for."""
