"""
Exception hierarchy for the engine.

Precondition failures raise; property failures are reported, never raised.
"""

from typing import Optional


class NlxError(Exception):
    """Base class for every engine error."""


class ContractError(NlxError, ValueError):
    """A precondition of an operation was violated."""


class NumericError(NlxError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value."""

    def __init__(self, message: str, step: Optional[int] = None, node: Optional[int] = None):
        self.step = step
        self.node = node
        if step is not None:
            message = f"{message} (step={step}, node={node})"
        super().__init__(message)


class ConvergenceError(NumericError):
    """An iteration did not converge within its cap."""

    def __init__(self, message: str, residual: float, step: Optional[int] = None):
        self.residual = residual
        super().__init__(f"{message}, last residual {residual:.3e}", step=step)


class ResourceBudgetError(NlxError):
    """The requested tree exceeds the configured size budget."""

    def __init__(self, requested: int, limit: int):
        self.requested = requested
        self.limit = limit
        super().__init__(
            f"Tree exponent N*d={requested} exceeds NLX_MAX_TREE_EXPONENT={limit}"
        )


class UnsupportedError(NlxError, NotImplementedError):
    """The operation is deliberately not provided for these inputs."""


class ConfigError(NlxError):
    """An experiment config could not be parsed or validated."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)
