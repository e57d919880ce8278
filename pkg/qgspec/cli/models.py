from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.generator import SubshiftSpec, WeightMode
from ..tracemap import CocycleKind

Precision = Literal["double", "extended"]


class RunConfig(BaseModel):
    """Everything a run needs; built from presets, a config file and flags, in that order."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    spec: Optional[SubshiftSpec] = Field(default=None, description="Inline subshift recipe")
    word_file: Optional[Path] = Field(default=None, description="Explicit window in token format")
    mode: WeightMode = WeightMode.GRAPH
    cocycle: CocycleKind = CocycleKind.CANONICAL

    e_lo: float = Field(default=0.0, description="Lower end of the energy range")
    e_hi: float = Field(default=40.0, description="Upper end of the energy range")
    e_points: int = Field(default=101, ge=2, description="Grid size for sweeps and plot data")
    tol: float = Field(default=1e-6, gt=0.0)

    n_max: int = Field(default=10, ge=5, description="Fibonacci index limit N")
    n_min: Optional[int] = Field(default=None, ge=5, description="Start of the N sweep")
    n_steps: int = Field(default=10_000, ge=1000)
    n_bases: int = Field(default=8, ge=1)

    origin: int = 0
    length: int = Field(default=233, ge=2, description="Window length for word, oracle and spectrum")
    two_sided: bool = False
    approximant_length: int = Field(default=55, ge=1)

    re_min: float = -5.0
    re_max: float = 5.0
    im_min: float = Field(default=0.1, gt=0.0)
    im_max: float = Field(default=10.0, gt=0.0)
    grid: int = Field(default=10, ge=1, description="Points per axis of the z grid")

    bm_k: int = Field(default=3, ge=-1, description="Agreement length of the Borg-Marchenko pair")
    bm_alpha: float = Field(default=1.5707963267948966, description="Ray angle arg z")

    M: int = Field(default=200, ge=16, description="Grid nodes per unit cell")

    precision: Precision = "double"
    workers: Optional[int] = Field(default=None, ge=1)
    out: Path = Path("qgspec-out")

    @field_validator("word_file")
    @classmethod
    def validate_word_file(cls, v: Optional[Path]) -> Optional[Path]:
        if v is not None and not v.is_file():
            raise ValueError(f"word file {v} does not exist")
        return v

    @model_validator(mode="after")
    def validate_ranges(self) -> "RunConfig":
        if not self.e_lo < self.e_hi:
            raise ValueError(f"energy range is empty: e_lo={self.e_lo}, e_hi={self.e_hi}")
        if not self.re_min <= self.re_max or not self.im_min <= self.im_max:
            raise ValueError("z grid bounds are inverted")
        if self.n_min is not None and self.n_min > self.n_max:
            raise ValueError(f"n_min={self.n_min} exceeds n_max={self.n_max}")
        return self

    def energy_grid(self) -> List[float]:
        step = (self.e_hi - self.e_lo) / (self.e_points - 1)
        return [self.e_lo + i * step for i in range(self.e_points)]

    def z_grid(self) -> List[complex]:
        def axis(lo: float, hi: float) -> List[float]:
            if self.grid == 1:
                return [lo]
            return [lo + i * (hi - lo) / (self.grid - 1) for i in range(self.grid)]

        return [complex(x, y) for y in axis(self.im_min, self.im_max) for x in axis(self.re_min, self.re_max)]


class RunManifest(BaseModel):
    command: str
    config: dict
    versions: dict
    started_at: str
    wall_time_s: float
    artifacts: List[str] = Field(default_factory=list)
    exit_status: int = 0
    warnings: List[str] = Field(default_factory=list)
