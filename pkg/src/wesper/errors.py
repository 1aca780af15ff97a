"""Exception taxonomy shared across the package.

Every failure surfaced to callers goes through one of these classes so the
CLI and HTTP service can map them to exit codes / status codes uniformly.
"""


class WesperError(Exception):
    """Base class for all package errors."""

    code = "error"


class FormatError(WesperError):
    """A file or payload is structurally invalid (bad WAV, bad checkpoint)."""

    code = "format"


class TooShortError(WesperError):
    """Input audio is shorter than the minimum an operation can process."""

    code = "too-short"


class ValidationError(WesperError):
    """An argument violates a precondition (non-finite input, bad shape)."""

    code = "validation"


class ConfigError(WesperError):
    """A configuration file or environment override is invalid."""

    code = "config"


class ProtocolError(WesperError):
    """Push-to-talk events arrived out of order."""

    code = "protocol"


class InsufficientDataError(WesperError):
    """Too few samples/frames to fit a model (e.g. k-means with N < k)."""

    code = "insufficient-data"
