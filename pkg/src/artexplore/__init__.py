"""artexplore: object-driven exploration engine for digitized art collections."""

__version__ = "0.1.0"
