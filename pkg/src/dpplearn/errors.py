"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid argument: dimension mismatch, off-simplex weights, bad config."""


class DataFormatError(ValueError):
    """A serialized file or record violates the documented schema."""


class NumericalError(RuntimeError):
    """A numerical precondition failed at runtime."""


class NotPositiveSemidefiniteError(NumericalError):
    """An eigenvalue fell below the tolerated negative band."""


class DegenerateLabelError(NumericalError):
    """The kernel restricted to a label subset is numerically singular."""
