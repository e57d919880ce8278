"""qgspec - spectra of radially symmetric quantum graphs with aperiodic branching."""

__version__ = "0.1.0"
__description__ = "Kirchhoff Laplacian spectra on radially symmetric aperiodic trees"

from .core.bands import BandSet
from .core.generator import SubshiftSpec, WeightMode
from .core.words import SymbolWindow
from .sequences import generate_word
from .sl_core import WeightProfile, weights_from_spheres

__all__ = [
    "BandSet",
    "SubshiftSpec",
    "SymbolWindow",
    "WeightMode",
    "WeightProfile",
    "generate_word",
    "weights_from_spheres",
]
