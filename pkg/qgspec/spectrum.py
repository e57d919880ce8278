"""Floquet bands, finite-interval eigenvalues and the assembled spectrum.

The Laplacian splits into the radial half-line operator plus two families
of finite pieces: operators on (n-1, n+1) with Dirichlet ends, repeated
(s_n - 1) times, and Dirichlet Laplacians on unit edges, repeated
(s_n - 1)(s_{n+1} - 1) times. The continuum part is approximated by
full-line objects (escape covers or Floquet bands).
"""

import logging
import math
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy import optimize

from .core.bands import BandSet, normalize_intervals
from .core.generator import SpecLike, SubshiftKind, WeightMode, coerce_spec
from .core.parallel import map_ordered
from .core.words import SymbolWindow
from .sequences import generate_word, is_fibonacci
from .sl_core import real_cell_entries, transfer_stack
from .tracemap import CocycleKind, escape_band_set

logger = logging.getLogger(__name__)

BAND_SLACK = 1e-9
EDGE_PROXIMITY = 0.1
DEFAULT_APPROXIMANT_LENGTH = 55


class EigenvalueGroup(BaseModel):
    """Eigenvalues of one finite piece with its multiplicity bookkeeping."""

    model_config = ConfigDict(frozen=True)

    kind: str = Field(description="h1 or h2")
    triple: Optional[Tuple[int, int, int]] = None
    eigenvalues: List[float]
    multiplicity: int = Field(ge=1, description="Copies per site")
    occurrences: int = Field(ge=1, description="Sites in the window carrying this piece")


class SpectrumReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    continuum: BandSet
    sigma1: List[EigenvalueGroup] = Field(default_factory=list)
    sigma2: List[EigenvalueGroup] = Field(default_factory=list)
    assembled: BandSet
    params: Dict[str, object] = Field(default_factory=dict)

    @computed_field  # type: ignore[misc]
    @property
    def sigma1_values(self) -> List[float]:
        return sorted({e for g in self.sigma1 for e in g.eigenvalues})

    @computed_field  # type: ignore[misc]
    @property
    def sigma2_values(self) -> List[float]:
        return sorted({e for g in self.sigma2 for e in g.eigenvalues})


class MeasureEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0)
    diagnostic: float = Field(ge=0.0, description="Bound on the change under tol -> tol/2")
    refined: Optional[float] = None


# ---------------------------------------------------------------------------
# Floquet bands


def period_weights(period_word: SymbolWindow, mode: Union[WeightMode, str]) -> np.ndarray:
    """One period of weights for the periodic extension of period_word."""
    s = np.asarray(period_word.data, dtype=np.float64)
    if WeightMode(mode) == WeightMode.GRAPH:
        return s * np.roll(s, -1)
    return s


def discriminant(weights: np.ndarray, energies: Union[float, np.ndarray]) -> np.ndarray:
    """Trace of the period monodromy."""
    with np.errstate(over="ignore", invalid="ignore"):
        return transfer_stack(weights, energies).traces()


def _excess(weights: np.ndarray, energy: float) -> float:
    """|D(E)| - 2 - slack; negative inside bands."""
    value = float(np.abs(discriminant(weights, energy))[0])
    return (value if math.isfinite(value) else 1e300) - 2.0 - BAND_SLACK


def _root(fn: Callable[[float], float], a: float, b: float, tol: float) -> Optional[float]:
    root, result = optimize.brentq(fn, a, b, xtol=tol, full_output=True, disp=False)
    return float(root) if result.converged else None


def _bands_on_range(
    bounds: Tuple[float, float], weights: np.ndarray, tol: float, points: int
) -> Tuple[List[Tuple[float, float]], bool]:
    E_lo, E_hi = bounds
    grid = np.linspace(E_lo, E_hi, points)
    D = discriminant(weights, grid)
    excess = np.where(np.isfinite(D), np.abs(D), np.inf) - 2.0 - BAND_SLACK
    inside = excess <= 0
    fn = partial(_excess, weights)
    conservative = False
    toggles: List[float] = []

    for i in np.flatnonzero(inside[1:] != inside[:-1]):
        a, b = grid[i], grid[i + 1]
        edge = _root(fn, a, b, tol)
        if edge is None:
            # keep the gap-side end so the band over-covers
            edge = a if inside[i + 1] else b
            conservative = True
        toggles.append(edge)

    # narrow gaps hidden between two in-band samples: local extrema of D near +-2
    slope = np.diff(D)
    for i in np.flatnonzero(slope[:-1] * slope[1:] < 0) + 1:
        if not (inside[i - 1] and inside[i] and inside[i + 1]):
            continue
        if abs(D[i]) < 2.0 - EDGE_PROXIMITY:
            continue
        a, b = grid[i - 1], grid[i + 1]
        peak = optimize.minimize_scalar(
            lambda e: -abs(float(discriminant(weights, e)[0])),
            bounds=(a, b),
            method="bounded",
            options={"xatol": tol * 1e-2},
        )
        if fn(float(peak.x)) <= 0:
            continue
        left, right = _root(fn, a, float(peak.x), tol), _root(fn, float(peak.x), b, tol)
        if left is None or right is None:
            conservative = True
            continue
        toggles.extend([left, right])
        logger.debug("narrow gap (%.9g, %.9g) found between grid samples", left, right)

    intervals = []
    start = E_lo if inside[0] else None
    for edge in sorted(toggles):
        if start is None:
            start = edge
        else:
            intervals.append((start, edge))
            start = None
    if start is not None:
        intervals.append((start, E_hi))
    return intervals, conservative


def floquet_bands(
    period_word: SymbolWindow,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    E_lo: float = 0.0,
    E_hi: float = 40.0,
    tol: float = 1e-8,
    grid_points: Optional[int] = None,
    workers: Optional[int] = 1,
) -> BandSet:
    """{E : |tr monodromy| <= 2} for the periodic extension of period_word."""
    if not E_lo < E_hi:
        raise ValueError(f"need E_lo < E_hi, got [{E_lo}, {E_hi}]")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    mode = WeightMode(mode)
    weights = period_weights(period_word, mode)
    p = len(weights)
    if grid_points is None:
        scale = math.sqrt(max(abs(E_lo), abs(E_hi), 1.0))
        grid_points = max(4001, int(400 * p * scale))

    chunks = max(1, workers or 1)
    edges = np.linspace(E_lo, E_hi, chunks + 1)
    ranges = [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
    task = partial(_bands_on_range, weights=weights, tol=tol, points=max(64, grid_points // chunks))
    results = map_ordered(task, ranges, workers)

    intervals = [iv for part, _ in results for iv in part]
    conservative = any(flag for _, flag in results)
    bands = BandSet(
        intervals=normalize_intervals(intervals, tol),
        provenance=f"floquet {period_word.to_text()} mode={mode.value}",
        conservative=conservative,
        tol=tol,
    )
    logger.debug("floquet bands of period %d: %d intervals", p, len(bands))
    return bands


# ---------------------------------------------------------------------------
# Finite pieces


def _h1_matching(energies: np.ndarray, w_left: float, w_right: float) -> np.ndarray:
    """u_L (w u_R') - (w u_L') u_R at the midpoint for Dirichlet data shot from both ends."""
    left = real_cell_entries(energies, w_left)
    right = real_cell_entries(energies, w_right)
    # state (0, 1) pushed one cell right from 0, and one cell left from 2
    u_l, p_l = left[1], left[3]
    u_r, p_r = -right[1], right[0]
    return u_l * p_r - p_l * u_r


def h1_eigenvalues(s_prev: int, s_mid: int, s_next: int, E_max: float, step: float = 0.01) -> List[float]:
    """Dirichlet eigenvalues on (n-1, n+1) with s_prev u'(n-) = s_next u'(n+), below E_max.

    s_mid only sets how often the piece repeats; the eigenvalues depend on
    the two edge weights.
    """
    if E_max <= 0:
        raise ValueError(f"E_max must be positive, got {E_max}")
    if min(s_prev, s_mid, s_next) < 1:
        raise ValueError("sphere numbers must be positive")
    k = np.arange(step, math.sqrt(E_max) + 2 * step, step)
    grid = k * k
    values = _h1_matching(grid, float(s_prev), float(s_next))

    def fn(e: float) -> float:
        return float(_h1_matching(np.array([e]), float(s_prev), float(s_next))[0])

    roots = []
    for i in np.flatnonzero(values[:-1] * values[1:] <= 0):
        a, b = grid[i], grid[i + 1]
        if values[i] == 0.0:
            root = a
        else:
            root = optimize.brentq(fn, a, b, xtol=1e-14, rtol=1e-14)
        if root <= E_max and (not roots or root - roots[-1] > 1e-9):
            roots.append(float(root))
    return roots


def h2_eigenvalues(E_max: float) -> List[float]:
    """Dirichlet Laplacian on a unit edge: (k pi)^2 <= E_max."""
    if E_max <= 0:
        raise ValueError(f"E_max must be positive, got {E_max}")
    out = []
    k = 1
    while (k * math.pi) ** 2 <= E_max:
        out.append((k * math.pi) ** 2)
        k += 1
    return out


Triple = Tuple[int, int, int]


def _site_counts(
    window: SymbolWindow, lo: int
) -> Tuple[Dict[Triple, int], Dict[Tuple[int, int], int]]:
    triples: Dict[Triple, int] = {}
    pairs: Dict[Tuple[int, int], int] = {}
    for n in range(max(lo, window.origin + 1), window.end - 1):
        triple = (window.at(n - 1), window.at(n), window.at(n + 1))
        if triple[1] > 1:
            triples[triple] = triples.get(triple, 0) + 1
    for n in range(max(lo - 1, window.origin), window.end - 1):
        pair = (window.at(n), window.at(n + 1))
        if (pair[0] - 1) * (pair[1] - 1) > 0:
            pairs[pair] = pairs.get(pair, 0) + 1
    return triples, pairs


def _continuum(
    spec: SpecLike, E_max: float, N: int, tol: float, mode: WeightMode, approximant_length: int
) -> BandSet:
    spec = coerce_spec(spec)
    letters = is_fibonacci(spec)
    if letters is not None:
        return escape_band_set(0.0, E_max, N, tol, mode, letters, CocycleKind.CANONICAL)
    if spec.kind == SubshiftKind.PERIODIC:
        assert spec.word is not None
        period = SymbolWindow.from_sequence(spec.word)
        return floquet_bands(period, mode, 0.0, E_max, tol)
    prefix = generate_word(spec, 0, approximant_length)
    logger.info("using the length-%d prefix as periodic approximant", approximant_length)
    return floquet_bands(prefix, mode, 0.0, E_max, tol)


def assemble_spectrum(
    spec: SpecLike,
    E_max: float = 40.0,
    N: int = 10,
    tol: float = 1e-6,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    two_sided: bool = False,
    window_length: int = 233,
    approximant_length: int = DEFAULT_APPROXIMANT_LENGTH,
) -> SpectrumReport:
    """Continuum surrogate plus the eigenvalues of every finite piece met in the word."""
    if E_max <= 0:
        raise ValueError(f"E_max must be positive, got {E_max}")
    mode = WeightMode(mode)
    spec = coerce_spec(spec)
    continuum = _continuum(spec, E_max, N, tol, mode, approximant_length)

    origin = -window_length if two_sided else 0
    window = generate_word(spec, origin, window_length - origin + 1)
    triples, pairs = _site_counts(window, origin + 1 if two_sided else 1)

    sigma1 = [
        EigenvalueGroup(
            kind="h1",
            triple=triple,
            eigenvalues=h1_eigenvalues(*triple, E_max),
            multiplicity=triple[1] - 1,
            occurrences=count,
        )
        for triple, count in sorted(triples.items())
    ]
    dirichlet = h2_eigenvalues(E_max)
    sigma2 = [
        EigenvalueGroup(kind="h2", eigenvalues=dirichlet, multiplicity=(a - 1) * (b - 1), occurrences=count)
        for (a, b), count in sorted(pairs.items())
    ]

    points = [(e, e) for group in sigma1 + sigma2 for e in group.eigenvalues]
    assembled = continuum.union(BandSet(intervals=points), provenance="assembled")
    label = "sigma(H)" if two_sided else "sigma(H+)"
    logger.info(
        "assembled %s: %d continuum intervals, %d h1 groups, %d h2 groups",
        label,
        len(continuum),
        len(sigma1),
        len(sigma2),
    )
    return SpectrumReport(
        continuum=continuum.model_copy(update={"provenance": f"{continuum.provenance} [{label}]"}),
        sigma1=sigma1,
        sigma2=sigma2,
        assembled=assembled,
        params={
            "spec": spec.label,
            "E_max": E_max,
            "N": N,
            "tol": tol,
            "mode": mode.value,
            "two_sided": two_sided,
            "window_length": window_length,
        },
    )


# ---------------------------------------------------------------------------
# Measure and sampling


def measure_estimate(bands: BandSet, refine: Optional[Callable[[float], BandSet]] = None) -> MeasureEstimate:
    """Total length; refine(tol / 2) reruns the producing computation for the diagnostic."""
    value = bands.total_measure
    edge_bound = 2.0 * len(bands) * (bands.tol or 0.0)
    if refine is None or bands.tol is None:
        return MeasureEstimate(value=value, diagnostic=edge_bound)
    finer = refine(bands.tol / 2.0)
    refined_bound = edge_bound + 2.0 * len(finer) * (finer.tol or 0.0)
    diagnostic = max(refined_bound, 2.0 * abs(finer.total_measure - value))
    return MeasureEstimate(value=value, diagnostic=diagnostic, refined=finer.total_measure)


def indicator_samples(bands: BandSet, energies: Sequence[float]) -> List[Tuple[float, int]]:
    return [(float(e), int(bands.contains(float(e)))) for e in energies]


def inclusion_fraction(
    cover: BandSet, approximant_bands: BandSet, slack: float, points: int = 10_001
) -> float:
    """Share of cover grid points lying within slack of approximant_bands."""
    if cover.is_empty:
        return 1.0
    lo, hi = cover.intervals[0][0], cover.intervals[-1][1]
    grid = np.linspace(lo, hi, points)
    retained = [e for e in grid if cover.contains(float(e))]
    if not retained:
        return 1.0
    hits = sum(approximant_bands.contains(float(e), slack) for e in retained)
    return hits / len(retained)
