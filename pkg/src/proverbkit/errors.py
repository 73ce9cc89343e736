"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ValidationError -> 2, ModelError -> 3,
DataError -> 4.
"""


class ProverbkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ProverbkitError):
    """Bad configuration or violated call preconditions."""


class DataError(ProverbkitError):
    """Malformed, duplicate or otherwise unusable input data."""


class ModelError(ProverbkitError):
    """An external model endpoint failed or is unreachable."""


class ProtocolError(ModelError):
    """The model answered, but not in the constrained format we asked for."""
