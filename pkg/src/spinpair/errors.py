"""Exception types shared across the package."""


class SpinpairError(Exception):
    """Base class for package errors."""


class ConfigError(SpinpairError, ValueError):
    """Invalid scenario or config file. Carries the offending key and line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.message = message
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class NumericError(SpinpairError, ArithmeticError):
    """A numerical step failed (singular system, overflow, ...)."""


class RateUndefinedError(NumericError):
    """Observable too close to zero for a logarithmic rate."""
