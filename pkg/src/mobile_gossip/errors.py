"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A function argument is outside its allowed domain."""


class ConfigError(Exception):
    """An experiment configuration could not be parsed or validated."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NumericalError(ArithmeticError):
    """A numerical routine produced a non-finite or unconverged result."""
