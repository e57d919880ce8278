"""Lyapunov exponents of the canonical transfer-matrix cocycle.

Rates are orbit averages over a handful of shifted base points; the
invariant measure itself is never built.
"""

import logging
from enum import Enum
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .core.generator import SpecLike, WeightMode, coerce_spec
from .core.parallel import map_ordered, split_grid
from .core.words import SymbolWindow
from .sequences import generate_word
from .sl_core import verbatim_cocycle_scaled, transfer_stack

logger = logging.getLogger(__name__)

BURN_IN = 100
BASE_STRIDE = 101
MIN_STEPS = 1000
DEFAULT_THRESHOLDS = (1e-2, 1e-1)
CHECKPOINT_EVERY = 100


class Classification(str, Enum):
    ZERO = "zero_candidate"
    HYPERBOLIC = "hyperbolic_candidate"
    UNDECIDED = "undecided"


class LyapunovEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    E: float
    value: float = Field(ge=0.0)
    n_steps: int
    spread: float = Field(ge=0.0, description="max - min of the per-base rates")
    n_bases: int
    mode: WeightMode = WeightMode.GRAPH
    classification: Optional[Classification] = None

    def as_row(self) -> Dict[str, object]:
        return {
            "E": self.E,
            "L_hat": self.value,
            "spread": self.spread,
            "n_steps": self.n_steps,
            "classification": self.classification.value if self.classification else "",
        }


def _base_weights(spec: SpecLike, n_steps: int, n_bases: int, mode: WeightMode) -> np.ndarray:
    """Weight rows, one per base point T^{b} omega, b = BURN_IN + j * BASE_STRIDE."""
    extra = 1 if mode == WeightMode.GRAPH else 0
    length = BURN_IN + BASE_STRIDE * (n_bases - 1) + n_steps + extra
    s = generate_word(spec, 0, length).as_array().astype(np.float64)
    rows = []
    for j in range(n_bases):
        start = BURN_IN + j * BASE_STRIDE
        block = s[start : start + n_steps + extra]
        rows.append(block[:-1] * block[1:] if mode == WeightMode.GRAPH else block)
    return np.stack(rows)


def _check_args(n_steps: int, n_bases: int) -> None:
    if n_steps < MIN_STEPS:
        raise ValueError(f"n_steps must be >= {MIN_STEPS}, got {n_steps}")
    if n_bases < 1:
        raise ValueError(f"n_bases must be >= 1, got {n_bases}")


def _rates(
    weights: np.ndarray, energies: np.ndarray, checkpoints: Optional[Sequence[int]] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Per-(energy, base) rates, shape (n_E, n_bases), plus checkpoint log norms."""
    n_bases, n_steps = weights.shape
    tiled = np.tile(weights, (len(energies), 1))
    row_energies = np.repeat(energies, n_bases)
    stack = transfer_stack(tiled, row_energies, checkpoints=checkpoints)
    rates = np.maximum(stack.log_norms(), 0.0) / n_steps
    history = None
    if stack.history is not None:
        history = stack.history.reshape(len(energies), n_bases, -1)
    return rates.reshape(len(energies), n_bases), history


def _estimate_chunk(
    energies: np.ndarray,
    weights: np.ndarray,
    mode: WeightMode,
    thresholds: Optional[Tuple[float, float]],
) -> List[LyapunovEstimate]:
    n_bases, n_steps = weights.shape
    checkpoints = list(range(CHECKPOINT_EVERY, n_steps + 1, CHECKPOINT_EVERY))
    rates, history = _rates(weights, energies, checkpoints if thresholds else None)
    out = []
    for i, energy in enumerate(energies):
        value = float(rates[i].mean())
        label = None
        if thresholds is not None:
            assert history is not None
            label = _classify(value, history[i], thresholds)
        out.append(
            LyapunovEstimate(
                E=float(energy),
                value=value,
                n_steps=n_steps,
                spread=float(rates[i].max() - rates[i].min()),
                n_bases=n_bases,
                mode=mode,
                classification=label,
            )
        )
    return out


def lyapunov_estimate(
    spec: SpecLike,
    E: float,
    n_steps: int = 10_000,
    n_bases: int = 8,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
) -> LyapunovEstimate:
    """Average of (1/n) log ||P_n|| over n_bases shifted base points."""
    _check_args(n_steps, n_bases)
    mode = WeightMode(mode)
    weights = _base_weights(coerce_spec(spec), n_steps, n_bases, mode)
    (estimate,) = _estimate_chunk(np.array([float(E)]), weights, mode, None)
    logger.debug("L(%g) ~ %.6g (spread %.3g)", E, estimate.value, estimate.spread)
    return estimate


def uniformity_spread(
    spec: SpecLike,
    E: float,
    n_steps: int = 10_000,
    n_bases: int = 8,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
) -> float:
    """Largest deviation of a single base point's rate from the pooled mean."""
    if n_bases < 8:
        raise ValueError(f"uniformity_spread needs n_bases >= 8, got {n_bases}")
    _check_args(n_steps, n_bases)
    mode = WeightMode(mode)
    weights = _base_weights(coerce_spec(spec), n_steps, n_bases, mode)
    rates, _ = _rates(weights, np.array([float(E)]))
    return float(np.max(np.abs(rates[0] - rates[0].mean())))


def _classify(value: float, history: np.ndarray, thresholds: Tuple[float, float]) -> Classification:
    eps_zero, eps_hyp = thresholds
    if value < eps_zero:
        return Classification.ZERO
    # history holds log norms every CHECKPOINT_EVERY steps past the burn-in offset
    monotone = bool(np.all(np.diff(history, axis=-1) >= -1e-8))
    if value > eps_hyp and monotone:
        return Classification.HYPERBOLIC
    return Classification.UNDECIDED


def classify_energy(
    spec: SpecLike,
    E: float,
    thresholds: Tuple[float, float] = DEFAULT_THRESHOLDS,
    n_steps: int = 10_000,
    n_bases: int = 8,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
) -> Classification:
    eps_zero, eps_hyp = thresholds
    if not 0 < eps_zero < eps_hyp:
        raise ValueError(f"thresholds must satisfy 0 < eps_zero < eps_hyp, got {thresholds}")
    _check_args(n_steps, n_bases)
    mode = WeightMode(mode)
    weights = _base_weights(coerce_spec(spec), n_steps, n_bases, mode)
    (estimate,) = _estimate_chunk(np.array([float(E)]), weights, mode, thresholds)
    assert estimate.classification is not None
    return estimate.classification


def lyapunov_sweep(
    spec: SpecLike,
    energies: Sequence[float],
    n_steps: int = 10_000,
    n_bases: int = 8,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    thresholds: Optional[Tuple[float, float]] = DEFAULT_THRESHOLDS,
    workers: Optional[int] = 1,
    chunk_size: int = 32,
) -> List[LyapunovEstimate]:
    """Estimates for a grid of energies, in grid order."""
    _check_args(n_steps, n_bases)
    mode = WeightMode(mode)
    weights = _base_weights(coerce_spec(spec), n_steps, n_bases, mode)
    grid = np.asarray(energies, dtype=np.float64)
    chunks = split_grid(grid, max(1, -(-len(grid) // chunk_size)))
    logger.info("lyapunov sweep: %d energies, %d steps, %d bases", len(grid), n_steps, n_bases)
    task = partial(_estimate_chunk, weights=weights, mode=mode, thresholds=thresholds)
    results = map_ordered(task, chunks, workers)
    return [estimate for chunk in results for estimate in chunk]


def cocycle_growth_gap(window: SymbolWindow, E: float, n: int) -> float:
    """(1/n) |log ||M_n|| - log ||P_n|||, normalized cocycle against canonical product.

    P_n runs over cells 0..n-1 with graph weights w_j = s_j s_{j+1}; both
    products need the window to cover indices 0..n+1.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    verbatim = verbatim_cocycle_scaled(window, E, n).log_norm()
    s = np.asarray(window.segment(0, n + 1), dtype=np.float64)
    canonical = float(transfer_stack(s[:-1] * s[1:], E).log_norms()[0])
    return abs(verbatim - canonical) / n
