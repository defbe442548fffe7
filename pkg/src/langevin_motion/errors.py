"""Exception types shared across the package."""


class MotionError(Exception):
    """Base class for all package errors."""


class ShapeError(MotionError, ValueError):
    """Operand shapes do not conform."""


class ContractError(MotionError, ValueError):
    """A precondition of an operation was violated."""


class ParseError(MotionError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(MotionError, ValueError):
    """Invalid configuration value."""


class TrainingError(MotionError, RuntimeError):
    """Training produced a non-finite value."""

    def __init__(self, message: str, step: int | None = None, component: str | None = None):
        self.step = step
        self.component = component
        super().__init__(message)
