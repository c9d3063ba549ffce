"""Exception types; the CLI maps each to its own exit code."""


class DxError(Exception):
    """Base class for pipeline failures."""


class ConfigError(DxError):
    """Bad invocation or configuration (missing files, invalid options)."""


class DataError(DxError, ValueError):
    """Input data violates the schema or an operation's preconditions."""


class DegenerateError(DxError, ArithmeticError):
    """A numeric quantity is undefined for the given data (e.g. zero denominator)."""
