"""Exception types raised across the package."""


class RulError(Exception):
    """Base class for package errors."""


class ParseError(RulError, ValueError):
    """A trajectory file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(RulError, ValueError):
    """Input data violates a structural invariant."""


class DomainError(RulError, ValueError):
    """An argument lies outside the domain of an operation."""


class ShapeError(RulError, ValueError):
    """Array shapes do not match what a model expects."""


class ConfigError(RulError, ValueError):
    """Invalid configuration value."""


class TrainingError(RulError, RuntimeError):
    """Training diverged."""

    def __init__(self, message: str, epoch: int):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


class ExperimentError(RulError, RuntimeError):
    """A stage of an experiment run failed."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
