"""
Error types shared by every service.

The CLI maps them onto exit codes:
    ConfigError  -> 1 (usage)
    DataError    -> 2
    NumericError -> 3
"""


class LinkPredError(Exception):
    """Base class for all errors raised by this project."""


class DataError(LinkPredError):
    """Input data is unreadable, malformed or incomplete."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(LinkPredError):
    """Experiment configuration is invalid or points at missing files."""


class ContractError(LinkPredError, ValueError):
    """A caller broke an operation's precondition."""


class ShapeError(LinkPredError, ValueError):
    """Tensor shapes are incompatible."""

    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = shapes
        listed = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {listed}")


class NumericError(LinkPredError):
    """NaN/Inf appeared in a forward value, a gradient or a training loss."""
