"""Fibonacci trace map, escape criterion and bounded-orbit band covers.

Half traces x_n = tr M(n, E) / 2 of the monodromies over the first F_n
cells (F_0 = 1, F_1 = 2, F_{n+1} = F_n + F_{n-1}) obey

    x_{n+1} = 2 x_n x_{n-1} - x_{n-2},    n >= 4,

so x_2, x_3, x_4 are computed from explicit products and the rest follows
from the recursion. An energy escapes once |x_{n+1}| > 1, |x_n| > 1 and
|x_{n+1} x_n| > |x_{n-1}|; from then on |x_k| > 1 for every k > n, which
is what makes the covers nested in N.
"""

import logging
import math
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .core.bands import BandSet, Interval
from .core.generator import WeightMode
from .core.words import SymbolWindow
from .sequences import fibonacci_spec, generate_word
from .sl_core import verbatim_cocycle_scaled, verbatim_step_entries, transfer_stack

logger = logging.getLogger(__name__)

SATURATION = 1e150
FIRST_RECURSION_INDEX = 4
PERMANENCE_STEPS = 3
# cells whose escaped ends both fired, the later one after step N - LATE_MARGIN, are refined
LATE_MARGIN = 4
BASE_SPACING = 0.01
FRICKE_TOLERANCE = 1e-8
DEFAULT_LETTERS = (1, 2)

Letters = Tuple[int, int]


class CocycleKind(str, Enum):
    """Which product defines M(n, E) in graph mode.

    CANONICAL multiplies the (u, w u') propagators and backs every escape
    test and cover by default. VERBATIM is the normalized step cocycle, kept
    for comparing initial traces.
    """

    VERBATIM = "verbatim"
    CANONICAL = "canonical"


def fibonacci_number(n: int) -> int:
    """F_n with F_0 = 1, F_1 = 2."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    a, b = 1, 2
    for _ in range(n):
        a, b = b, a + b
    return a


class TraceTriple(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_prev: float
    x_curr: float
    x_next: float
    index: int = Field(description="Fibonacci index n of x_next")
    saturated: bool = False

    def values(self) -> Tuple[float, float, float]:
        return self.x_prev, self.x_curr, self.x_next


class EscapeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    E: float
    escaped: bool
    index: Optional[int] = Field(default=None, description="Middle index n of the escape criterion")
    max_abs: float
    steps: int = Field(description="Largest Fibonacci index reached")
    mode: WeightMode
    permanence_verified: Optional[bool] = None


# ---------------------------------------------------------------------------
# Initial traces


def _letter_word(length: int, letters: Letters) -> List[int]:
    a, b = letters
    word = generate_word(fibonacci_spec(), 0, length).data
    return [a if s == 1 else b for s in word]


def _resolve(
    mode: Union[WeightMode, str], cocycle: Union[CocycleKind, str]
) -> Tuple[WeightMode, CocycleKind]:
    mode = WeightMode(mode)
    cocycle = CocycleKind(cocycle)
    if mode == WeightMode.SIMPLIFIED:
        cocycle = CocycleKind.CANONICAL
    return mode, cocycle


def _verbatim_half_traces(word: Sequence[int], energies: np.ndarray, steps: int) -> np.ndarray:
    ma = np.ones_like(energies)
    mb = np.zeros_like(energies)
    mc = np.zeros_like(energies)
    md = np.ones_like(energies)
    cache = {}
    for j in range(steps):
        key = (word[j], word[j + 2])
        if key not in cache:
            cache[key] = verbatim_step_entries(energies, *key)
        ca, cb, cc, cd = cache[key]
        ma, mb, mc, md = ca * ma + cb * mc, ca * mb + cb * md, cc * ma + cd * mc, cc * mb + cd * md
    return 0.5 * (ma + md)


def _saturate(x: np.ndarray) -> np.ndarray:
    return np.where(np.isfinite(x), np.clip(x, -SATURATION, SATURATION), SATURATION)


def initial_half_traces(
    energies: Union[float, Sequence[float], np.ndarray],
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.VERBATIM,
) -> np.ndarray:
    """x_2, x_3, x_4 for every energy, shape (3, n_E)."""
    mode, cocycle = _resolve(mode, cocycle)
    grid = np.atleast_1d(np.asarray(energies, dtype=np.float64))
    word = _letter_word(fibonacci_number(FIRST_RECURSION_INDEX) + 2, letters)
    rows = []
    with np.errstate(over="ignore", invalid="ignore"):
        for n in (2, 3, FIRST_RECURSION_INDEX):
            cells = fibonacci_number(n)
            if mode == WeightMode.SIMPLIFIED:
                x = transfer_stack(word[:cells], grid).half_traces()
            elif cocycle == CocycleKind.CANONICAL:
                weights = [word[j] * word[j + 1] for j in range(cells)]
                x = transfer_stack(weights, grid).half_traces()
            else:
                x = _verbatim_half_traces(word, grid, cells)
            rows.append(_saturate(x))
    return np.stack(rows)


def fibonacci_initial_traces(
    E: float,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.VERBATIM,
) -> TraceTriple:
    x2, x3, x4 = initial_half_traces(E, mode, letters, cocycle)[:, 0]
    return TraceTriple(x_prev=float(x2), x_curr=float(x3), x_next=float(x4), index=FIRST_RECURSION_INDEX)


def explicit_half_traces(
    E: float,
    n_max: int,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.VERBATIM,
) -> List[float]:
    """x_2..x_{n_max} straight from matrix products, with log accumulators."""
    mode, cocycle = _resolve(mode, cocycle)
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    word = _letter_word(fibonacci_number(n_max) + 2, letters)
    traces = []
    for n in range(2, n_max + 1):
        cells = fibonacci_number(n)
        if cocycle == CocycleKind.VERBATIM:
            window = SymbolWindow(origin=0, data=tuple(word))
            mono = verbatim_cocycle_scaled(window, E, cells)
            half = 0.5 * mono.matrix.trace.real
            traces.append(_scaled_value(half, mono.log_scale))
            continue
        if mode == WeightMode.SIMPLIFIED:
            weights = word[:cells]
        else:
            weights = [word[j] * word[j + 1] for j in range(cells)]
        stack = transfer_stack(weights, E)
        half = 0.5 * float(stack.matrices[0, 0, 0] + stack.matrices[0, 1, 1])
        traces.append(_scaled_value(half, float(stack.log_scale[0])))
    return traces


def _scaled_value(value: float, log_scale: float) -> float:
    if value == 0.0:
        return 0.0
    magnitude = math.log(abs(value)) + log_scale
    if magnitude > math.log(SATURATION):
        return math.copysign(SATURATION, value)
    return value * math.exp(log_scale)


# ---------------------------------------------------------------------------
# Recursion


def trace_step(t: TraceTriple) -> TraceTriple:
    """One step of x_{n+1} = 2 x_n x_{n-1} - x_{n-2}; saturates beyond SATURATION."""
    nxt = 2.0 * t.x_next * t.x_curr - t.x_prev
    saturated = t.saturated
    if not math.isfinite(nxt) or abs(nxt) > SATURATION:
        nxt = math.copysign(SATURATION, nxt) if not math.isnan(nxt) else SATURATION
        saturated = True
    return TraceTriple(x_prev=t.x_curr, x_curr=t.x_next, x_next=nxt, index=t.index + 1, saturated=saturated)


def fricke_invariant(t: TraceTriple) -> float:
    x, y, z = t.x_next, t.x_curr, t.x_prev
    return x * x + y * y + z * z - 2.0 * x * y * z - 1.0


def _fricke_drift(reference: float, t: TraceTriple) -> float:
    scale = 1.0 + max(v * v for v in t.values())
    return abs(fricke_invariant(t) - reference) / scale


def _mp_orbit(start: TraceTriple, N_max: int) -> List[float]:
    """Recursion in 50-digit arithmetic, used when the double orbit drifts."""
    with mpmath.workdps(50):
        a, b, c = (mpmath.mpf(v) for v in start.values())
        out = []
        for _ in range(start.index, N_max):
            a, b, c = b, c, 2 * c * b - a
            out.append(float(mpmath.sign(c)) * min(float(abs(c)), SATURATION))
        return out


def trace_orbit(
    E: float,
    N_max: int,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.CANONICAL,
) -> List[float]:
    """x_2..x_{N_max}, recursion from n = 4 on."""
    if N_max < FIRST_RECURSION_INDEX:
        raise ValueError(f"N_max must be >= {FIRST_RECURSION_INDEX}, got {N_max}")
    t = fibonacci_initial_traces(E, mode, letters, cocycle)
    orbit = list(t.values())
    reference = fricke_invariant(t)
    while t.index < N_max:
        t = trace_step(t)
        orbit.append(t.x_next)
        if not t.saturated and max(abs(v) for v in t.values()) < 1e6:
            if _fricke_drift(reference, t) > FRICKE_TOLERANCE:
                logger.warning("Fricke drift at E=%g, n=%d; recomputing in extended precision", E, t.index)
                start = fibonacci_initial_traces(E, mode, letters, cocycle)
                return list(start.values()) + _mp_orbit(start, N_max)
    return orbit


def escape_index(
    E: float,
    N_max: int = 30,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.CANONICAL,
) -> EscapeReport:
    if N_max < 5:
        raise ValueError(f"N_max must be >= 5, got {N_max}")
    mode = WeightMode(mode)
    orbit = trace_orbit(E, N_max + PERMANENCE_STEPS, mode, letters, cocycle)
    # orbit[i] is x_{i+2}
    x = {i + 2: v for i, v in enumerate(orbit)}
    for n in range(3, N_max):
        if abs(x[n + 1]) > 1.0 and abs(x[n]) > 1.0 and abs(x[n + 1] * x[n]) > abs(x[n - 1]):
            permanent = all(abs(x[k]) > 1.0 for k in range(n + 1, n + 2 + PERMANENCE_STEPS))
            if not permanent:
                logger.warning("escape at E=%g, n=%d not followed by |x_k| > 1", E, n)
            return EscapeReport(
                E=E,
                escaped=True,
                index=n,
                max_abs=max(abs(x[k]) for k in range(2, n + 2)),
                steps=n + 1,
                mode=mode,
                permanence_verified=permanent,
            )
    return EscapeReport(
        E=E,
        escaped=False,
        max_abs=max(abs(x[k]) for k in range(2, N_max + 1)),
        steps=N_max,
        mode=mode,
    )


# ---------------------------------------------------------------------------
# Band covers


def escape_indices(
    energies: np.ndarray,
    N: int,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.CANONICAL,
) -> np.ndarray:
    """Smallest n + 1 <= N at which the escape criterion fires, N + 1 where it never does."""
    x_prev, x_curr, x_next = initial_half_traces(energies, mode, letters, cocycle)
    first = np.full(x_next.shape, N + 1, dtype=np.int64)
    index = FIRST_RECURSION_INDEX
    while True:
        fired = (
            (np.abs(x_next) > 1.0)
            & (np.abs(x_curr) > 1.0)
            & (np.abs(x_next * x_curr) > np.abs(x_prev))
        )
        first = np.where(fired & (first > N), index, first)
        if index >= N:
            return first
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = _saturate(2.0 * x_next * x_curr - x_prev)
        x_prev, x_curr, x_next = x_curr, x_next, nxt
        index += 1


def escaped_by(
    energies: np.ndarray,
    N: int,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.CANONICAL,
) -> np.ndarray:
    """Boolean mask: the escape criterion fired with n + 1 <= N."""
    return escape_indices(energies, N, mode, letters, cocycle) <= N


def _base_points(E_lo: float, E_hi: float, N: int, max_evaluations: int) -> int:
    """Grid size with spacing min(BASE_SPACING, F_N^{-5/4})."""
    spacing = min(BASE_SPACING, fibonacci_number(N) ** -1.25)
    wanted = int(math.ceil((E_hi - E_lo) / spacing)) + 1
    if wanted > max(1001, max_evaluations // 2):
        logger.warning(
            "B_%d grid capped at %d points (spacing %.3g wanted); narrow bands may be missed",
            N,
            max_evaluations // 2,
            spacing,
        )
        wanted = max_evaluations // 2
    return max(1001, wanted)


def _late_pairs(first: np.ndarray, N: int) -> np.ndarray:
    """Mask over adjacent pairs: both ends escaped, the later one after step N - LATE_MARGIN."""
    lo, hi = first[:-1], first[1:]
    return (lo <= N) & (hi <= N) & (np.maximum(lo, hi) > N - LATE_MARGIN)


def _refine_late_cells(
    grid: np.ndarray,
    first: np.ndarray,
    N: int,
    tol: float,
    budget: int,
    evaluate: Callable[[np.ndarray], np.ndarray],
) -> Tuple[np.ndarray, np.ndarray, List[Interval], int, bool]:
    """Split cells between two late escapes until they are narrower than tol.

    A component of B_N can sit strictly inside a grid cell whose ends both
    escaped; its ends then escape only a few steps before N. Returns the
    merged grid, its escape indices, the cells that stayed unresolved and
    go into the cover whole, the evaluations spent and whether the budget ran out.
    """
    mask = _late_pairs(first, N)
    a, b = grid[:-1][mask], grid[1:][mask]
    fa, fb = first[:-1][mask], first[1:][mask]
    new_e: List[np.ndarray] = []
    new_first: List[np.ndarray] = []
    unresolved: List[Interval] = []
    spent = 0
    exhausted = False
    while a.size:
        narrow = (b - a) <= tol
        # the later end escaped only at step N: a component narrower than tol may hide here
        keep = narrow & (np.maximum(fa, fb) >= N)
        unresolved.extend(zip(a[keep].tolist(), b[keep].tolist()))
        a, b, fa, fb = a[~narrow], b[~narrow], fa[~narrow], fb[~narrow]
        if not a.size:
            break
        if spent + a.size > budget:
            unresolved.extend(zip(a.tolist(), b.tolist()))
            exhausted = True
            break
        mid = 0.5 * (a + b)
        fm = evaluate(mid)
        spent += mid.size
        new_e.append(mid)
        new_first.append(fm)
        left = (fm <= N) & (np.maximum(fa, fm) > N - LATE_MARGIN)
        right = (fm <= N) & (np.maximum(fm, fb) > N - LATE_MARGIN)
        a, b, fa, fb = (
            np.concatenate([a[left], mid[right]]),
            np.concatenate([mid[left], b[right]]),
            np.concatenate([fa[left], fm[right]]),
            np.concatenate([fm[left], fb[right]]),
        )
    if new_e:
        grid = np.concatenate([grid] + new_e)
        first = np.concatenate([first] + new_first)
        order = np.argsort(grid, kind="stable")
        grid, first = grid[order], first[order]
    return grid, first, unresolved, spent, exhausted


def escape_band_set(
    E_lo: float,
    E_hi: float,
    N: int,
    tol: float = 1e-6,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.CANONICAL,
    grid_points: Optional[int] = None,
    max_evaluations: int = 2_000_000,
) -> BandSet:
    """Cover of B_N within [E_lo, E_hi] by closed intervals.

    The energy grid, with spacing tied to F_N, is scanned first. Cells whose
    two ends both escaped late are split until any component of B_N inside
    them shows up or the cell is narrower than tol. Every alive/escaped
    transition is then bisected down to tol and the escaped end of the
    bracket is kept. When the evaluation budget runs out, unresolved cells
    and brackets keep their full width and the result is flagged conservative.
    """
    if not E_lo < E_hi:
        raise ValueError(f"need E_lo < E_hi, got [{E_lo}, {E_hi}]")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if N < 5:
        raise ValueError(f"N must be >= 5, got {N}")
    mode = WeightMode(mode)

    def evaluate(energies: np.ndarray) -> np.ndarray:
        return escape_indices(energies, N, mode, letters, cocycle)

    points = grid_points or _base_points(E_lo, E_hi, N, max_evaluations)
    grid = np.linspace(E_lo, E_hi, points)
    first = evaluate(grid)
    evaluations = points
    grid, first, unresolved, spent, conservative = _refine_late_cells(
        grid, first, N, tol, max(0, max_evaluations - evaluations), evaluate
    )
    evaluations += spent
    alive = first > N

    edges = np.flatnonzero(alive[1:] != alive[:-1])
    lo = grid[edges].copy()
    hi = grid[edges + 1].copy()
    lo_alive = alive[edges]
    widest = float(np.max(hi - lo)) if edges.size else 0.0
    steps = max(0, int(math.ceil(math.log2(widest / tol)))) if widest > tol else 0
    if edges.size and evaluations + steps * edges.size > max_evaluations:
        steps = max(0, (max_evaluations - evaluations) // edges.size)
        conservative = True
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        mid_alive = evaluate(mid) > N
        # move the bracket end that shares mid's state
        same_as_lo = mid_alive == lo_alive
        lo = np.where(same_as_lo, mid, lo)
        hi = np.where(same_as_lo, hi, mid)
    evaluations += steps * edges.size

    intervals: List[Interval] = list(unresolved)
    start = E_lo if alive[0] else None
    for k in range(edges.size):
        if lo_alive[k]:
            intervals.append((start, float(hi[k])))
            start = None
        else:
            start = float(lo[k])
    if start is not None:
        intervals.append((start, E_hi))

    logger.debug(
        "B_%d cover on [%g, %g]: %d intervals (%d unresolved cells), %d evaluations",
        N,
        E_lo,
        E_hi,
        len(intervals),
        len(unresolved),
        evaluations,
    )
    return BandSet(
        intervals=intervals,
        provenance=f"escape set N={N} mode={mode.value}",
        conservative=conservative,
        tol=tol,
    )


def measure_decay_curve(
    E_lo: float,
    E_hi: float,
    Ns: Sequence[int],
    tol: float = 1e-6,
    mode: Union[WeightMode, str] = WeightMode.GRAPH,
    letters: Letters = DEFAULT_LETTERS,
    cocycle: Union[CocycleKind, str] = CocycleKind.CANONICAL,
) -> List[Tuple[int, float]]:
    """Total measure of the B_N cover for each N, as observed (no rate is fitted)."""
    curve = []
    for N in sorted(Ns):
        cover = escape_band_set(E_lo, E_hi, N, tol, mode, letters, cocycle)
        curve.append((N, cover.total_measure))
    return curve
