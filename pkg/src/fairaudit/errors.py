"""Exception types shared across the package."""


class DataError(Exception):
    """Raised when input data violates a precondition or invariant."""


class SchemaError(DataError):
    """Raised when a schema declaration does not match the data."""
