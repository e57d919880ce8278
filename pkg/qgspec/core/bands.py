import bisect
import math
from typing import Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator

Interval = Tuple[float, float]


def normalize_intervals(intervals: Iterable[Interval], merge_gap: float = 0.0) -> List[Interval]:
    """Sort closed intervals and merge those overlapping or closer than merge_gap."""
    ordered = sorted((float(a), float(b)) for a, b in intervals)
    merged: List[Interval] = []
    for a, b in ordered:
        if b < a:
            raise ValueError(f"interval [{a}, {b}] has hi < lo")
        if merged and a - merged[-1][1] <= merge_gap:
            lo, hi = merged[-1]
            merged[-1] = (lo, max(hi, b))
        else:
            merged.append((a, b))
    return merged


class BandSet(BaseModel):
    """Finite disjoint union of closed energy intervals."""

    model_config = ConfigDict(frozen=True)

    intervals: List[Interval] = Field(default_factory=list)
    provenance: str = Field(default="", description="floquet word, escape set or assembled")
    conservative: bool = Field(default=False, description="Budget ran out; set may over-cover")
    tol: Optional[float] = Field(default=None, gt=0.0)

    @field_validator("intervals")
    @classmethod
    def validate_intervals(cls, v: List[Interval]) -> List[Interval]:
        return normalize_intervals(v)

    @computed_field  # type: ignore[misc]
    @property
    def total_measure(self) -> float:
        return math.fsum(b - a for a, b in self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def distance(self, energy: float) -> float:
        """Distance from energy to the set (inf when empty)."""
        if not self.intervals:
            return math.inf
        los = [a for a, _ in self.intervals]
        i = bisect.bisect_right(los, energy) - 1
        best = math.inf
        for j in (i, i + 1):
            if 0 <= j < len(self.intervals):
                a, b = self.intervals[j]
                if a <= energy <= b:
                    return 0.0
                best = min(best, abs(energy - a), abs(energy - b))
        return best

    def contains(self, energy: float, slack: float = 0.0) -> bool:
        return self.distance(energy) <= slack

    def is_subset_of(self, other: "BandSet", slack: float = 0.0) -> bool:
        for a, b in self.intervals:
            if not any(c - slack <= a and b <= d + slack for c, d in other.intervals):
                return False
        return True

    def union(self, other: "BandSet", provenance: Optional[str] = None) -> "BandSet":
        return BandSet(
            intervals=list(self.intervals) + list(other.intervals),
            provenance=provenance or self.provenance,
            conservative=self.conservative or other.conservative,
            tol=self.tol,
        )

    def merged(self, gap: float) -> "BandSet":
        """Copy with intervals closer than gap merged."""
        return self.model_copy(update={"intervals": normalize_intervals(self.intervals, gap)})

    def clipped(self, lo: float, hi: float) -> "BandSet":
        kept = [(max(a, lo), min(b, hi)) for a, b in self.intervals if b >= lo and a <= hi]
        return self.model_copy(update={"intervals": kept})
