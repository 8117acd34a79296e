"""Exception types shared across the package."""


class HyperballError(Exception):
    """Base class for all errors raised by hyperball."""


class DomainError(HyperballError, ValueError):
    """A point lies outside the ball, or an input is not finite."""


class DimensionMismatchError(HyperballError, ValueError):
    pass


class CurvatureMismatchError(HyperballError, ValueError):
    pass


class TrainingDivergedError(HyperballError, RuntimeError):
    """Raised when the training loss becomes non-finite.

    The failing step index is kept on ``step``.
    """

    def __init__(self, step, loss):
        super().__init__(f"non-finite loss {loss!r} at step {step}")
        self.step = step
        self.loss = loss
