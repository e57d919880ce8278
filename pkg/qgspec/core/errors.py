"""Exception hierarchy shared by every qgspec module.

All errors derive from ``ValueError`` so callers that only care about bad
input can keep catching the builtin.
"""


class QGSpecError(ValueError):
    """Base class for all qgspec errors."""


class WordGenerationError(QGSpecError):
    """A subshift specification cannot produce the requested window."""


class WindowError(QGSpecError):
    """A symbol window is too short or does not cover the requested indices."""


class SupportError(QGSpecError):
    """An interval or truncation point lies outside a weight profile."""


class ConvergenceError(QGSpecError):
    """A numerical procedure did not reach its requested tolerance."""


class ConfigError(QGSpecError):
    """A run configuration is malformed or references missing files."""
