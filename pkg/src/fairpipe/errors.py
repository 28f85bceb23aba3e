"""Exception types raised across the package."""


class FairpipeError(Exception):
    """Base class for all errors raised by fairpipe."""


class SchemaMismatch(FairpipeError):
    pass


class ParseError(FairpipeError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class BadFractions(FairpipeError):
    pass


class TooFewRows(FairpipeError):
    pass


class EmptyTrain(FairpipeError):
    pass


class EmptyData(FairpipeError):
    pass


class DimensionMismatch(FairpipeError):
    pass


class NoCompleteRows(FairpipeError):
    pass


class UnknownColumn(FairpipeError):
    pass


class ResidualMissing(FairpipeError):
    pass


class BadK(FairpipeError):
    pass


class EmptyGrid(FairpipeError):
    pass


class EmptyCell(FairpipeError):
    pass


class BadLambda(FairpipeError):
    pass


class EmptyGroup(FairpipeError):
    pass


class UnknownGroupValue(FairpipeError):
    pass


class EmptyValidation(FairpipeError):
    pass


class LengthMismatch(FairpipeError):
    pass


class SelectorOutOfRange(FairpipeError):
    pass


class ConfigError(FairpipeError):
    """Invalid experiment configuration or dataset registry entry."""


class LifecycleError(FairpipeError):
    """A component failed; ``step`` names the lifecycle step that raised."""

    def __init__(self, step, cause):
        super().__init__(f"{step}: {type(cause).__name__}: {cause}")
        self.step = step
        self.cause = cause


class DegenerateLabels(UserWarning):
    """Only one class present; the learner returned a constant model."""
