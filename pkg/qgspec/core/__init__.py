from .bands import BandSet, normalize_intervals
from .errors import (
    ConfigError,
    ConvergenceError,
    QGSpecError,
    SupportError,
    WindowError,
    WordGenerationError,
)
from .generator import BaseWordGenerator, SubshiftKind, SubshiftSpec, WeightMode
from .words import Alphabet, SymbolWindow

__all__ = [
    "Alphabet",
    "BandSet",
    "BaseWordGenerator",
    "ConfigError",
    "ConvergenceError",
    "QGSpecError",
    "SubshiftKind",
    "SubshiftSpec",
    "SupportError",
    "SymbolWindow",
    "WeightMode",
    "WindowError",
    "WordGenerationError",
    "normalize_intervals",
]
