"""Sphere-number sequences: generation, the shift metric and factor statistics.

Windows are produced by the registered generators in ``qgspec.generators``;
this module is the public face used by every other pipeline.
"""

import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, Field

from .core.errors import WindowError, WordGenerationError
from .core.generator import SpecLike, SubshiftKind, SubshiftSpec, coerce_spec
from .core.registry import GeneratorRegistry
from .core.words import SymbolWindow
from .generators.substitution import apply_rules

logger = logging.getLogger(__name__)

Factor = Tuple[int, ...]


class ShiftDistance(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0, description="Metric truncated to the common index range")
    tail_bound: float = Field(ge=0.0, description="Upper bound on the omitted terms")
    radius: int = Field(ge=0, description="Largest R with [-R, R] inside the overlap")


class FactorStatistics(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    frequencies: Dict[Factor, float]
    complexity: int
    positions: int = Field(description="Number of complete factors counted")


# ---------------------------------------------------------------------------
# Presets


def fibonacci_spec(a: int = 1, b: int = 2) -> SubshiftSpec:
    return SubshiftSpec(kind=SubshiftKind.SUBSTITUTION, rules={a: [a, b], b: [a]}, seed=a)


def free_spec(symbol: int = 1) -> SubshiftSpec:
    return SubshiftSpec(kind=SubshiftKind.PERIODIC, word=[symbol])


def periodic_spec(word: Sequence[int]) -> SubshiftSpec:
    return SubshiftSpec(kind=SubshiftKind.PERIODIC, word=list(word))


def sturmian_spec(
    alpha: float,
    phase: float = 0.0,
    breakpoints: Optional[Sequence[str]] = None,
    values: Sequence[int] = (1, 2),
) -> SubshiftSpec:
    """Rotation coding; the default partition is {0, 1 - alpha, 1} taken exactly."""
    if breakpoints is None:
        cut = 1 - Fraction(alpha)
        breakpoints = ["0", str(cut), "1"]
    return SubshiftSpec(
        kind=SubshiftKind.STURMIAN,
        alpha=alpha,
        phase=phase,
        breakpoints=list(breakpoints),
        values=list(values),
    )


def is_fibonacci(spec: SpecLike) -> Optional[Tuple[int, int]]:
    """Letters (a, b) when spec is the substitution a -> ab, b -> a seeded at a."""
    spec = coerce_spec(spec)
    if spec.kind != SubshiftKind.SUBSTITUTION or spec.rules is None or len(spec.rules) != 2:
        return None
    a = spec.seed
    assert a is not None
    (b,) = [k for k in spec.rules if k != a]
    if list(spec.rules[a]) == [a, b] and list(spec.rules[b]) == [a]:
        return a, b
    return None


# ---------------------------------------------------------------------------
# Generation


def generate_word(spec: SpecLike, origin: int, length: int) -> SymbolWindow:
    """Window of s_n for n in [origin, origin + length)."""
    if length < 1:
        raise WordGenerationError(f"length must be >= 1, got {length}")
    generator = GeneratorRegistry.create_generator(spec)
    window = generator.generate(origin, length)
    logger.debug("generated %s window [%d, %d)", generator.name, origin, origin + length)
    return window


def substitute(window: SymbolWindow, rules: Dict[int, Sequence[int]]) -> SymbolWindow:
    """Apply a substitution letterwise; the image keeps the window's origin."""
    missing = set(window.data) - set(rules)
    if missing:
        raise WordGenerationError(f"no substitution rule for symbols {sorted(missing)}")
    return SymbolWindow(origin=window.origin, data=tuple(apply_rules(window.data, rules)))


# ---------------------------------------------------------------------------
# Metric


def shift_distance(a: SymbolWindow, b: SymbolWindow) -> ShiftDistance:
    """Truncated d(a, b) = sum over n of (1 - delta(a_n, b_n)) / 2^(|n|+1)."""
    lo = max(a.origin, b.origin)
    hi = min(a.end, b.end)
    if hi <= lo:
        raise WindowError("windows share no indices")
    if not lo <= 0 < hi:
        raise WindowError(f"common range [{lo}, {hi}) does not contain index 0")

    terms = [
        0.5 ** (abs(n) + 1)
        for n, (x, y) in zip(range(lo, hi), zip(a.segment(lo, hi), b.segment(lo, hi)))
        if x != y
    ]
    radius = min(-lo, hi - 1)
    return ShiftDistance(value=math.fsum(terms), tail_bound=0.5**radius, radius=radius)


# ---------------------------------------------------------------------------
# Factor statistics


def _factor_codes(window: SymbolWindow, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct length-n factors as void scalars, with their counts."""
    symbols = np.array(window.alphabet.symbols)
    if len(symbols) > 255:
        raise WindowError("factor counting supports at most 255 distinct symbols")
    codes = np.searchsorted(symbols, window.as_array()).astype(np.uint8)
    rows = np.ascontiguousarray(sliding_window_view(codes, n))
    keys = rows.view(np.dtype((np.void, n))).ravel()
    return np.unique(keys, return_counts=True)


def _require_length(window: SymbolWindow, n: int) -> None:
    if n < 1:
        raise WindowError(f"factor length must be positive, got {n}")
    if len(window) < 10 * n:
        raise WindowError(
            f"window of length {len(window)} too short for factors of length {n} "
            f"(need at least {10 * n})"
        )


def factor_statistics(window: SymbolWindow, n: int) -> FactorStatistics:
    """Occurrence frequencies of the complete length-n factors of window."""
    _require_length(window, n)
    keys, counts = _factor_codes(window, n)
    total = int(counts.sum())
    symbols = window.alphabet.symbols
    raw = np.frombuffer(keys.tobytes(), dtype=np.uint8).reshape(len(keys), n)
    frequencies = {
        tuple(symbols[c] for c in row): int(count) / total for row, count in zip(raw, counts)
    }
    return FactorStatistics(n=n, frequencies=frequencies, complexity=len(keys), positions=total)


def boshernitzan_profile(window: SymbolWindow, n_max: int) -> List[Tuple[int, float]]:
    """Pairs (n, n * minimal factor frequency) for n = 1..n_max."""
    _require_length(window, n_max)
    profile = []
    for n in range(1, n_max + 1):
        _, counts = _factor_codes(window, n)
        eta = counts.min() / counts.sum()
        profile.append((n, float(n * eta)))
    return profile


# ---------------------------------------------------------------------------
# Periodicity diagnostics


def _smallest_period(values: Sequence[int]) -> Optional[int]:
    length = len(values)
    for p in range(1, length // 2 + 1):
        if all(values[i] == values[i + p] for i in range(length - p)):
            return p
    return None


def pair_periodicity(window: SymbolWindow) -> Tuple[Optional[int], Optional[int]]:
    """Smallest periods of s_n * s_{n+1} and of s_n observed in the window."""
    data = window.data
    products = [x * y for x, y in zip(data, data[1:])]
    return _smallest_period(products), _smallest_period(data)


# ---------------------------------------------------------------------------
# Token files


def format_tokens(header: Dict[str, object], data: Sequence[int]) -> str:
    lines = [f"{key}={value}" for key, value in header.items()]
    lines.append(" ".join(str(s) for s in data))
    return "\n".join(lines) + "\n"


def parse_tokens(text: str) -> Tuple[Dict[str, str], List[int]]:
    header: Dict[str, str] = {}
    tokens: List[int] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if "=" in stripped and not tokens:
            key, _, value = stripped.partition("=")
            header[key.strip()] = value.strip()
            continue
        try:
            tokens.extend(int(tok) for tok in stripped.split())
        except ValueError as exc:
            raise WindowError(f"non-integer token in word file: {stripped!r}") from exc
    if "origin" not in header:
        raise WindowError("word file is missing the 'origin=<int>' header")
    return header, tokens


def write_word(window: SymbolWindow, path: Union[str, Path]) -> None:
    Path(path).write_text(format_tokens({"origin": window.origin}, window.data))


def read_word(path: Union[str, Path]) -> SymbolWindow:
    header, tokens = parse_tokens(Path(path).read_text())
    return SymbolWindow(origin=int(header["origin"]), data=tuple(tokens))
