"""Exception types shared across the package.

The CLI maps these onto exit codes: `ConfigError` -> 2, `NumericError` -> 3,
`InputFormatError` and `OSError` -> 4.
"""


class ConfigError(ValueError):
    """Invalid experiment configuration or parameter combination."""


class NumericError(ArithmeticError):
    """A numerical procedure could not deliver a trustworthy answer."""


class QuadratureError(NumericError):
    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class AsymptoteUndefined(NumericError):
    pass


class InputFormatError(ValueError):
    """A data file could not be parsed; the message carries the line number."""
