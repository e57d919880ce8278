"""Sphere-number sequence generators - plugin architecture."""

# Import generators to trigger registration
from . import periodic, sturmian, substitution

__all__ = ["periodic", "sturmian", "substitution"]
