"""Finite alphabets and indexed windows of sphere numbers."""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Tuple

import numpy as np

from .errors import WindowError


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of admissible sphere numbers."""

    symbols: Tuple[int, ...]

    def __post_init__(self) -> None:
        symbols = tuple(int(s) for s in self.symbols)
        if not symbols:
            raise ValueError("Alphabet must contain at least one symbol")
        if any(s < 1 for s in symbols):
            raise ValueError(f"Alphabet symbols must be positive integers, got {symbols}")
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"Alphabet symbols must be distinct, got {symbols}")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def from_symbols(cls, symbols: Iterable[int]) -> "Alphabet":
        """Build the alphabet of the distinct symbols in first-seen order."""
        seen = dict.fromkeys(int(s) for s in symbols)
        return cls(tuple(seen))

    def __contains__(self, symbol: object) -> bool:
        return symbol in self.symbols

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def is_aperiodic_capable(self) -> bool:
        return len(self.symbols) >= 2


@dataclass(frozen=True)
class SymbolWindow:
    """Values s_n for n in [origin, origin + len(data))."""

    origin: int
    data: Tuple[int, ...] = field(repr=False)

    def __post_init__(self) -> None:
        data = tuple(int(s) for s in self.data)
        if not data:
            raise WindowError("SymbolWindow must be nonempty")
        if min(data) < 1:
            raise WindowError("Sphere numbers must be positive integers")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "origin", int(self.origin))

    @classmethod
    def from_sequence(cls, data: Sequence[int], origin: int = 0) -> "SymbolWindow":
        return cls(origin=origin, data=tuple(data))

    def __len__(self) -> int:
        return len(self.data)

    def __iter__(self) -> Iterator[int]:
        return iter(self.data)

    @property
    def end(self) -> int:
        """One past the last covered index."""
        return self.origin + len(self.data)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet.from_symbols(sorted(set(self.data)))

    def covers(self, lo: int, hi: int) -> bool:
        """True when every index in [lo, hi] is inside the window."""
        return self.origin <= lo and hi < self.end

    def at(self, n: int) -> int:
        if not self.origin <= n < self.end:
            raise WindowError(
                f"Index {n} outside window [{self.origin}, {self.end})"
            )
        return self.data[n - self.origin]

    def segment(self, start: int, stop: int) -> Tuple[int, ...]:
        """Symbols s_start, ..., s_{stop-1} by absolute index."""
        if stop <= start:
            return ()
        if not self.covers(start, stop - 1):
            raise WindowError(
                f"Range [{start}, {stop}) outside window [{self.origin}, {self.end})"
            )
        return self.data[start - self.origin : stop - self.origin]

    def subwindow(self, start: int, stop: int) -> "SymbolWindow":
        return SymbolWindow(origin=start, data=self.segment(start, stop))

    def shifted(self, k: int = 1) -> "SymbolWindow":
        """Window of T^k s, where (T s)_n = s_{n+1}."""
        return SymbolWindow(origin=self.origin - k, data=self.data)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.data, dtype=np.int64)

    def to_text(self) -> str:
        return " ".join(str(s) for s in self.data)
