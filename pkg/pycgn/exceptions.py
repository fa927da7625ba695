"""pycgn exception definitions."""

from __future__ import annotations


class InvalidArgumentError(Exception):
    """Define an error when an argument is outside its allowed range."""


class InvalidMaskError(Exception):
    """Define an error when a mask has values outside [0, 1]."""


class InvalidTextureError(Exception):
    """Define an error when a texture image is too small or malformed."""


class InsufficientTexturesError(Exception):
    """Define an error when a texture class folder has too few images."""


class FetchRequiredError(Exception):
    """Raised when source data is missing and must be fetched first."""


class InvalidDatasetError(Exception):
    """Define an error when a dataset lacks required fields."""


class CorruptCheckpointError(Exception):
    """Raised when a checkpoint does not match its manifest."""


class ConfigError(Exception):
    """Define a configuration error."""


class OutputExistsError(Exception):
    """Raised when an output directory exists and overwrite was not requested."""


class MaskCollapseError(Exception):
    """Raised when training aborts because the mask collapsed."""

    def __init__(self, message, state=None, step=None):
        """Custom collapse exception class"""
        super(MaskCollapseError, self).__init__(message)
        self.message = message
        self.state = state
        self.step = step


class NumericFailureError(Exception):
    """Raised when a loss turns non-finite."""

    def __init__(self, message, step=None, breakdown=None):
        """Custom numeric failure exception class"""
        super(NumericFailureError, self).__init__(message)
        self.message = message
        self.step = step
        self.breakdown = breakdown or {}


class StageError(Exception):
    """Defines a failure of one stage of a reproduction run."""

    def __init__(self, stage, message):
        """Custom stage exception class"""
        super(StageError, self).__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


# Exception classes for downloads
class RequestError(Exception):
    """Define a bad request error (400)."""


class NotFoundError(Exception):
    """Represents a not found error (404)."""


class TooManyRequestsError(Exception):
    """Represents a error when request quota have been exceeded (429)."""


class InternalServerError(Exception):
    """Represents an internal server error (500)."""


class ServiceUnavailableError(Exception):
    """Represents a service unavailable error (503)."""


class APIError(Exception):
    """Error representing a generic HTTP error."""


class NoConnectionError(Exception):
    """Raised when the endpoint cannot be reached."""
