"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or incomplete experiment/model configuration."""


class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.column = column


class DataError(ValueError):
    """Dataset contents violate a model assumption (e.g. non-binary labels)."""


class NumericalError(ArithmeticError):
    """A non-finite value appeared; ``index`` names the offending particle if known."""

    def __init__(self, message, index=None):
        if index is not None:
            message = f"{message} (particle {index})"
        super().__init__(message)
        self.index = index
