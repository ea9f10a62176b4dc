class TrackMLError(Exception):
    """Base class for errors raised by this package."""


class DataError(TrackMLError, ValueError):
    """Input data is missing, malformed or unusable for the requested step."""
