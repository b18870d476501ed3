"""
Exception hierarchy shared by every lab app.
"""
from django.core.exceptions import ImproperlyConfigured


class LabError(Exception):
    """Base class for all errors raised by the lab."""


class DatagramError(LabError):
    """Problems on the datagram wire path."""


class FrameError(DatagramError):
    """Datagram has the wrong length."""


class MalformedError(DatagramError):
    """Datagram block flag bytes are not 0xFF 0xEE."""


class OrderingError(DatagramError):
    """Azimuth sequence decreased inside a sweep."""


class AssignmentConflict(DatagramError):
    """Two sweep rows claimed the same grid cell during reverse-engineering."""

    def __init__(self, message, conflicts=None):
        super().__init__(message)
        self.conflicts = list(conflicts or [])


class ConfigError(LabError, ImproperlyConfigured):
    """Invalid configuration value or parameter."""


class AlignmentError(LabError):
    """Attacked and baseline runs are not frame-aligned."""


class GeometryError(LabError, ValueError):
    """Geometric operation outside its domain (e.g. zero-length vector)."""


class TransportError(LabError):
    """Socket failure on the live UDP path."""
