"""Exception hierarchy shared across the package."""


class TrustFactorError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(TrustFactorError, ValueError):
    """Invalid input data, labels, or hyperparameters."""


class ParseError(ValidationError):
    """Malformed edge-list or pair-list input; carries the line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ModelIOError(TrustFactorError):
    """Problems reading or writing a serialized model container."""


class VersionMismatchError(ModelIOError):
    """Unrecognized magic bytes or unsupported container version."""


class TruncatedStreamError(ModelIOError):
    """Model stream ended before the declared payload was complete."""


class ChecksumError(ModelIOError):
    """Stored checksum does not match the payload that was read."""


class SolverError(TrustFactorError):
    """Numerical failure inside the training engine."""


class SingularSystemError(SolverError):
    """A least-squares subproblem was exactly singular (only possible at
    zero regularization)."""
