from abc import ABC, abstractmethod
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import WordGenerationError
from .words import Alphabet, SymbolWindow

# Denominator bound used to reject rational rotation numbers.
RATIONAL_DENOMINATOR_BOUND = 10**6


class SubshiftKind(str, Enum):
    SUBSTITUTION = "substitution"
    STURMIAN = "sturmian"
    PERIODIC = "periodic"
    EXPLICIT = "explicit"


class WeightMode(str, Enum):
    GRAPH = "graph"
    SIMPLIFIED = "simplified"


class SubshiftSpec(BaseModel):
    """Recipe for a sphere-number sequence.

    Exactly the fields belonging to ``kind`` are used; the validator below
    rejects specs that omit them.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: SubshiftKind

    # substitution
    rules: Optional[Dict[int, List[int]]] = Field(default=None, description="symbol -> image word")
    seed: Optional[int] = Field(default=None, ge=1, description="Seed symbol of the fixed point")
    two_sided: bool = Field(default=True, description="Allow negative indices via centered supertiles")

    # sturmian
    alpha: Optional[float] = Field(default=None, gt=0.0, lt=1.0, description="Rotation number")
    phase: float = Field(default=0.0, ge=0.0, lt=1.0, description="Initial phase omega_0")
    breakpoints: Optional[List[str]] = Field(
        default=None, description="Rational partition 0=a_0<...<a_N=1, as 'p/q' strings"
    )
    values: Optional[List[int]] = Field(default=None, description="Symbols gamma_1..gamma_N")

    # periodic / explicit
    word: Optional[List[int]] = Field(default=None, description="Period word or explicit window")
    origin: int = Field(default=0, description="Index of the first explicit symbol")

    @field_validator("rules")
    @classmethod
    def validate_rules(cls, v: Optional[Dict[int, List[int]]]) -> Optional[Dict[int, List[int]]]:
        if v is None:
            return v
        for symbol, image in v.items():
            if symbol < 1:
                raise ValueError(f"substitution symbol {symbol} must be positive")
            if not image:
                raise ValueError(f"substitution image of {symbol} must be nonempty")
            missing = [s for s in image if s not in v]
            if missing:
                raise ValueError(f"image of {symbol} uses symbols without rules: {missing}")
        return v

    @field_validator("breakpoints")
    @classmethod
    def validate_breakpoints(cls, v: Optional[List[str]]) -> Optional[List[str]]:
        if v is None:
            return v
        points = [Fraction(p) for p in v]
        if points[0] != 0 or points[-1] != 1:
            raise ValueError("sturmian partition must start at 0 and end at 1")
        if any(b <= a for a, b in zip(points, points[1:])):
            raise ValueError("sturmian partition must be strictly increasing")
        return [str(p) for p in points]

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: Optional[float]) -> Optional[float]:
        if v is None:
            return v
        approx = Fraction(v).limit_denominator(RATIONAL_DENOMINATOR_BOUND)
        if abs(v - float(approx)) <= 4 * abs(v) * 2.0**-52:
            raise ValueError(
                f"alpha={v} equals {approx} within rounding; rotation numbers must be irrational"
            )
        return v

    @field_validator("word", "values")
    @classmethod
    def validate_symbols(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None:
            if not v:
                raise ValueError("symbol list must be nonempty")
            if min(v) < 1:
                raise ValueError("sphere numbers must be positive integers")
        return v

    @model_validator(mode="after")
    def validate_kind_fields(self) -> "SubshiftSpec":
        if self.kind == SubshiftKind.SUBSTITUTION:
            if self.rules is None or self.seed is None:
                raise ValueError("substitution spec needs rules and seed")
            if self.seed not in self.rules:
                raise ValueError(f"seed {self.seed} has no substitution rule")
        elif self.kind == SubshiftKind.STURMIAN:
            if self.alpha is None or self.breakpoints is None or self.values is None:
                raise ValueError("sturmian spec needs alpha, breakpoints and values")
            if len(self.values) != len(self.breakpoints) - 1:
                raise ValueError("sturmian spec needs one value per partition interval")
        elif self.word is None:
            raise ValueError(f"{self.kind.value} spec needs a word")
        return self

    @property
    def alphabet(self) -> Alphabet:
        if self.kind == SubshiftKind.SUBSTITUTION:
            assert self.rules is not None
            return Alphabet.from_symbols(sorted(self.rules))
        if self.kind == SubshiftKind.STURMIAN:
            assert self.values is not None
            return Alphabet.from_symbols(sorted(set(self.values)))
        assert self.word is not None
        return Alphabet.from_symbols(sorted(set(self.word)))

    @property
    def label(self) -> str:
        if self.kind == SubshiftKind.SUBSTITUTION:
            rules = ",".join(
                f"{k}->{''.join(map(str, v))}" for k, v in sorted((self.rules or {}).items())
            )
            return f"substitution[{rules}]"
        if self.kind == SubshiftKind.STURMIAN:
            return f"sturmian[alpha={self.alpha!r},phase={self.phase!r}]"
        return f"{self.kind.value}[{' '.join(map(str, self.word or []))}]"


class BaseWordGenerator(ABC):
    """Produces windows of one sphere-number sequence."""

    def __init__(self, spec: SubshiftSpec):
        self.spec = spec

    @property
    def name(self) -> str:
        return self.__class__.__name__

    @abstractmethod
    def symbols(self, origin: int, length: int) -> List[int]:
        """Return s_n for n in [origin, origin + length)."""

    def generate(self, origin: int, length: int) -> SymbolWindow:
        if length < 1:
            raise WordGenerationError(f"window length must be positive, got {length}")
        data = self.symbols(origin, length)
        return SymbolWindow(origin=origin, data=tuple(data))


SpecLike = Union[SubshiftSpec, Dict[str, object]]


def coerce_spec(spec: SpecLike) -> SubshiftSpec:
    if isinstance(spec, SubshiftSpec):
        return spec
    return SubshiftSpec(**spec)  # type: ignore[arg-type]
