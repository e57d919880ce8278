"""Transfer matrices for -(1/mu)(mu u')' = z u with mu constant on unit cells.

Solutions are carried in the canonical state (u, p) with p = w u'. Kirchhoff
vertex conditions are continuity of (u, p), so a product of cell matrices is
the exact solution propagator across any number of vertices.

Branch convention: r = sqrt(-z) with Re r > 0 for z off [0, inf) and
r = -i sqrt(E) for z = E >= 0.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from .core.errors import SupportError, WindowError
from .core.generator import WeightMode
from .core.words import SymbolWindow
from .sequences import format_tokens, parse_tokens

logger = logging.getLogger(__name__)

# Renormalize products once an entry exceeds this magnitude.
RENORM_THRESHOLD = 1e10
DET_TOLERANCE = 1e-12
DET_WARNING = 1e-6


# ---------------------------------------------------------------------------
# Weight profiles


@dataclass(frozen=True)
class WeightProfile:
    """Weights w_n on [n, n+1) for n in [origin, origin + len(weights))."""

    origin: int
    weights: Tuple[int, ...] = field(repr=False)
    mode: WeightMode = WeightMode.SIMPLIFIED
    source: Optional[SymbolWindow] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        weights = tuple(int(w) for w in self.weights)
        if not weights:
            raise WindowError("WeightProfile must be nonempty")
        if min(weights) < 1:
            raise WindowError("weights must be positive integers")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "mode", WeightMode(self.mode))

    @property
    def end(self) -> int:
        return self.origin + len(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def weight(self, n: int) -> int:
        if not self.origin <= n < self.end:
            raise SupportError(f"cell {n} outside profile [{self.origin}, {self.end})")
        return self.weights[n - self.origin]

    def check_support(self, x_from: float, x_to: float) -> None:
        lo, hi = min(x_from, x_to), max(x_from, x_to)
        if lo < self.origin or hi > self.end:
            raise SupportError(
                f"interval [{lo}, {hi}] outside profile support [{self.origin}, {self.end}]"
            )

    def shifted(self, k: int = 1) -> "WeightProfile":
        """Profile of the shifted sequence: cell n of the result is cell n + k here."""
        return WeightProfile(self.origin - k, self.weights, self.mode, None)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)


def weights_from_spheres(
    window: SymbolWindow, mode: Union[WeightMode, str] = WeightMode.GRAPH
) -> WeightProfile:
    """Graph mode: w_n = s_n s_{n+1}; simplified mode: w_n = s_n."""
    mode = WeightMode(mode)
    data = window.data
    if mode == WeightMode.GRAPH:
        if len(data) < 2:
            raise WindowError("graph mode needs a window of length >= 2")
        weights = tuple(x * y for x, y in zip(data, data[1:]))
    else:
        weights = data
    return WeightProfile(origin=window.origin, weights=weights, mode=mode, source=window)


def jump_ratios(window: SymbolWindow) -> List[float]:
    """alpha_k = s_{k-1} / s_k for consecutive window entries."""
    return [x / y for x, y in zip(window.data, window.data[1:])]


def write_profile(profile: WeightProfile, path: Union[str, Path]) -> None:
    header = {"origin": profile.origin, "mode": profile.mode.value}
    Path(path).write_text(format_tokens(header, profile.weights))


def read_profile(path: Union[str, Path]) -> WeightProfile:
    header, tokens = parse_tokens(Path(path).read_text())
    mode = WeightMode(header.get("mode", WeightMode.SIMPLIFIED.value))
    return WeightProfile(origin=int(header["origin"]), weights=tuple(tokens), mode=mode)


# ---------------------------------------------------------------------------
# Spectral parameter and 2x2 values


def principal_root(z: complex) -> complex:
    z = complex(z)
    if z.imag == 0.0 and z.real >= 0.0:
        return complex(0.0, -math.sqrt(z.real))
    return cmath.sqrt(-z)


@dataclass(frozen=True)
class SpectralParameter:
    z: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", complex(self.z))

    @classmethod
    def from_energy(cls, energy: float) -> "SpectralParameter":
        return cls(complex(float(energy), 0.0))

    @property
    def r(self) -> complex:
        return principal_root(self.z)

    @property
    def energy(self) -> float:
        return self.z.real

    @property
    def is_real(self) -> bool:
        return self.z.imag == 0.0


@dataclass(frozen=True)
class Mat2:
    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_array(cls, m: np.ndarray) -> "Mat2":
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def scale(self, factor: complex) -> "Mat2":
        return Mat2(self.a * factor, self.b * factor, self.c * factor, self.d * factor)

    def apply(self, state: "StateVector") -> "StateVector":
        return StateVector(self.a * state.u + self.b * state.p, self.c * state.u + self.d * state.p)

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def adjugate(self) -> "Mat2":
        """Inverse for unimodular matrices."""
        return Mat2(self.d, -self.b, -self.c, self.a)

    def max_abs(self) -> float:
        return max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array(), 2))

    def is_close(self, other: "Mat2", tol: float = 1e-10) -> bool:
        diff = np.abs(self.as_array() - other.as_array()).max()
        return bool(diff <= tol * max(1.0, self.max_abs()))


@dataclass(frozen=True)
class StateVector:
    u: complex
    p: complex

    def as_tuple(self) -> Tuple[complex, complex]:
        return self.u, self.p


def wronskian(f: StateVector, g: StateVector) -> complex:
    """W(f, g) = f (mu g') - (mu f') g."""
    return f.u * g.p - f.p * g.u


def _unimodularize(m: Mat2) -> Mat2:
    """Rescale to det 1 once the drift, relative to the terms of ad - bc, exceeds DET_TOLERANCE."""
    det = m.det
    drift = abs(det - 1.0) / max(1.0, abs(m.a * m.d) + abs(m.b * m.c))
    if drift <= DET_TOLERANCE or det == 0 or not cmath.isfinite(det):
        return m
    if drift > DET_WARNING:
        logger.warning("determinant drifted by %.3g; renormalizing", drift)
    return m.scale(1.0 / cmath.sqrt(det))


# ---------------------------------------------------------------------------
# Cell matrices and products


def cell_matrix(w: float, sp: SpectralParameter, length: float = 1.0) -> Mat2:
    """Propagator of (u, w u') across a cell of constant weight w and given length."""
    if length <= 0:
        raise ValueError(f"cell length must be positive, got {length}")
    if sp.z == 0:
        return Mat2(1.0, length / w, 0.0, 1.0)
    r = sp.r
    rl = r * length
    ch, sh = cmath.cosh(rl), cmath.sinh(rl)
    return _unimodularize(Mat2(ch, sh / (w * r), w * r * sh, ch))


@dataclass(frozen=True)
class Monodromy:
    """Product e^{log_scale} * matrix."""

    matrix: Mat2
    log_scale: float = 0.0

    def value(self) -> Mat2:
        return self.matrix.scale(math.exp(self.log_scale))

    def log_norm(self) -> float:
        return self.log_scale + math.log(self.matrix.norm())


def _segments(x_from: float, x_to: float) -> List[Tuple[int, float]]:
    """Cells and lengths traversed going right from x_from to x_to."""
    pieces: List[Tuple[int, float]] = []
    x = x_from
    while x < x_to - 1e-15:
        cell = math.floor(x + 1e-12)
        stop = min(float(cell + 1), x_to)
        pieces.append((cell, stop - x))
        x = stop
    return pieces


def monodromy(profile: WeightProfile, sp: SpectralParameter, x_from: float, x_to: float) -> Monodromy:
    """Normalized transfer matrix from x_from to x_to (either direction)."""
    profile.check_support(x_from, x_to)
    lo, hi = min(x_from, x_to), max(x_from, x_to)
    m = Mat2.identity()
    log_scale = 0.0
    cache = {}
    for cell, length in _segments(lo, hi):
        key = (profile.weight(cell), round(length, 14))
        step = cache.get(key)
        if step is None:
            step = cache[key] = cell_matrix(key[0], sp, length)
        m = step @ m
        peak = m.max_abs()
        if peak > RENORM_THRESHOLD:
            m = m.scale(1.0 / peak)
            log_scale += math.log(peak)
    if x_to < x_from:
        m = m.adjugate()
    return Monodromy(m, log_scale)


def propagate(
    profile: WeightProfile,
    sp: SpectralParameter,
    x_from: float,
    x_to: float,
    state: StateVector,
) -> StateVector:
    """Exact transport of the state (u, w u') from x_from to x_to."""
    mono = monodromy(profile, sp, x_from, x_to)
    return mono.value().apply(state)


@dataclass(frozen=True)
class SolutionPair:
    """Dirichlet solution phi and Neumann solution theta with quasi-derivatives."""

    phi: complex
    phi_p: complex
    theta: complex
    theta_p: complex

    @property
    def wronskian(self) -> complex:
        return wronskian(StateVector(self.phi, self.phi_p), StateVector(self.theta, self.theta_p))


def dirichlet_neumann(profile: WeightProfile, sp: SpectralParameter, x: float) -> SolutionPair:
    """phi(0) = 0, (mu phi')(0) = 1 and theta(0) = 1, (mu theta')(0) = 0, evaluated at x."""
    if x < 0:
        raise SupportError(f"x must be >= 0, got {x}")
    m = monodromy(profile, sp, 0.0, x).value()
    return SolutionPair(phi=m.b, phi_p=m.d, theta=m.a, theta_p=m.c)


# ---------------------------------------------------------------------------
# Large-z asymptotics


def growth_coefficient(window: SymbolWindow, n: int) -> float:
    """c(n) = (1/s_0) prod_{k=1}^{n} (s_k + s_{k-1}) / (2 s_k)."""
    if n < 0:
        raise WindowError(f"n must be nonnegative, got {n}")
    if not window.covers(0, n):
        raise WindowError(f"window [{window.origin}, {window.end}) does not cover 0..{n}")
    s = window.segment(0, n + 1)
    value = 1.0 / s[0]
    for k in range(1, n + 1):
        value *= (s[k] + s[k - 1]) / (2.0 * s[k])
    return value


def _scaled_cell(w: float, r: complex, length: float) -> Mat2:
    """e^{-r l} times the cell matrix; bounded for Re r > 0."""
    decay = cmath.exp(-2.0 * r * length)
    ch = 0.5 * (1.0 + decay)
    sh = 0.5 * (1.0 - decay)
    return Mat2(ch, sh / (w * r), w * r * sh, ch)


@dataclass(frozen=True)
class AsymptoticRatios:
    phi: complex
    phi_prime: complex
    theta: complex
    theta_prime: complex


def asymptotic_residuals(window: SymbolWindow, x: float, z: complex) -> AsymptoticRatios:
    """Ratios of phi, phi', theta, theta' to their large-z leading terms.

    Uses the simplified weight w_n = s_n. The theta ratios are divided by s_0
    as well, so all four tend to 1 when s_0 = 1.
    """
    if float(x).is_integer():
        raise ValueError(f"x must not be an integer, got {x}")
    if x < 0:
        raise SupportError(f"x must be >= 0, got {x}")
    z = complex(z)
    if z.imag == 0.0 and z.real >= 0.0:
        raise ValueError("z must lie off [0, inf)")
    floor_x = math.floor(x)
    if not window.covers(0, floor_x):
        raise WindowError(f"window does not cover cells 0..{floor_x}")

    profile = weights_from_spheres(window, WeightMode.SIMPLIFIED)
    r = principal_root(z)
    m = Mat2.identity()
    for cell, length in _segments(0.0, x):
        m = _scaled_cell(profile.weight(cell), r, length) @ m

    c = growth_coefficient(window, floor_x)
    s0 = window.at(0)
    w = profile.weight(floor_x)
    return AsymptoticRatios(
        phi=m.b * 2.0 * r / c,
        phi_prime=(m.d / w) * 2.0 / c,
        theta=m.a * 2.0 / (s0 * c),
        theta_prime=(m.c / w) * 2.0 / (s0 * c * r),
    )


def asymptotic_residual(window: SymbolWindow, x: float, z: complex) -> complex:
    """phi(z, x) * 2 sqrt(-z) * exp(-sqrt(-z) x) / c(floor x); tends to 1 as |z| grows."""
    return asymptotic_residuals(window, x, z).phi


# ---------------------------------------------------------------------------
# Normalized cocycle written in (f(T^{n+1}) u, u') coordinates


def _sinc_terms(energy: float) -> Tuple[float, float, float]:
    """cos sqrt(E), sin sqrt(E)/sqrt(E) and sqrt(E) sin sqrt(E), continued to E <= 0."""
    if energy > 0:
        k = math.sqrt(energy)
        return math.cos(k), math.sin(k) / k, k * math.sin(k)
    if energy < 0:
        kappa = math.sqrt(-energy)
        return math.cosh(kappa), math.sinh(kappa) / kappa, -kappa * math.sinh(kappa)
    return 1.0, 1.0, 0.0


def verbatim_step_matrix(energy: float, f0: int, f2: int) -> Mat2:
    """One step of the normalized cocycle with f(omega) = f0 and f(T^2 omega) = f2."""
    cos_k, sinc_k, k_sin_k = _sinc_terms(float(energy))
    return Mat2(
        f2 * cos_k / f0,
        f2 * sinc_k,
        -k_sin_k / f2,
        f0 * cos_k / f2,
    )


def verbatim_step_entries(energies: np.ndarray, f0: int, f2: int) -> np.ndarray:
    """Entries (a, b, c, d) of verbatim_step_matrix for many real energies, shape (4, n)."""
    cells = real_cell_entries(energies, 1.0)
    cos_k, sinc_k, minus_k_sin_k = cells[0], cells[1], cells[2]
    return np.stack([f2 * cos_k / f0, f2 * sinc_k, minus_k_sin_k / f2, f0 * cos_k / f2])


def verbatim_cocycle_scaled(window: SymbolWindow, energy: float, n: int, base: int = 0) -> Monodromy:
    """Ordered product of n steps starting at T^base omega, with log accumulator."""
    if n == 0:
        return Monodromy(Mat2.identity(), 0.0)
    lo, hi = (base, base + n + 1) if n > 0 else (base + n, base + 1)
    if not window.covers(lo, hi):
        raise WindowError(
            f"cocycle of {n} steps at base {base} needs indices {lo}..{hi}, "
            f"window covers [{window.origin}, {window.end})"
        )
    m = Mat2.identity()
    log_scale = 0.0
    cache = {}
    # n < 0 multiplies inverses from T^{-1} omega leftwards down to T^n omega.
    positions = range(base, base + n) if n > 0 else range(base - 1, base + n - 1, -1)
    for j in positions:
        key = (window.at(j), window.at(j + 2))
        step = cache.get(key)
        if step is None:
            step = verbatim_step_matrix(energy, *key)
            if n < 0:
                step = step.adjugate()
            cache[key] = step
        m = step @ m
        peak = m.max_abs()
        if peak > RENORM_THRESHOLD:
            m = m.scale(1.0 / peak)
            log_scale += math.log(peak)
    return Monodromy(m, log_scale)


def verbatim_cocycle(window: SymbolWindow, energy: float, n: int, base: int = 0) -> Mat2:
    return verbatim_cocycle_scaled(window, energy, n, base).value()


# ---------------------------------------------------------------------------
# Vectorized real-energy products


def real_cell_entries(energies: np.ndarray, w: float, length: float = 1.0) -> np.ndarray:
    """Entries (a, b, c, d) of the cell matrix for many real energies, shape (4, n)."""
    energies = np.asarray(energies, dtype=np.float64)
    q = np.sqrt(np.abs(energies))
    positive = energies >= 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ql = q * length
        a = np.where(positive, np.cos(ql), np.cosh(ql))
        sinc = np.where(positive, np.sinc(ql / np.pi), np.sinh(ql) / np.where(q > 0, ql, 1.0))
        sinc = np.where(q == 0, 1.0, sinc)
        b = length * sinc / w
        c = np.where(positive, -w * q * np.sin(ql), w * q * np.sinh(ql))
    return np.stack([a, b, c, a])


@dataclass
class TransferStack:
    """Rows of normalized 2x2 products with their log scales."""

    matrices: np.ndarray
    log_scale: np.ndarray
    history: Optional[np.ndarray] = None

    def half_traces(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return 0.5 * (self.matrices[:, 0, 0] + self.matrices[:, 1, 1]) * np.exp(self.log_scale)

    def traces(self) -> np.ndarray:
        return 2.0 * self.half_traces()

    def log_norms(self) -> np.ndarray:
        return self.log_scale + np.log(_spectral_norms(self.matrices))


def _spectral_norms(m: np.ndarray) -> np.ndarray:
    frob = np.sum(m * m, axis=(1, 2))
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    disc = np.sqrt(np.maximum(frob * frob - 4.0 * det * det, 0.0))
    return np.sqrt(0.5 * (frob + disc))


def transfer_stack(
    weights: Union[Sequence[float], np.ndarray],
    energies: Union[float, Sequence[float], np.ndarray],
    checkpoints: Optional[Sequence[int]] = None,
) -> TransferStack:
    """Products of canonical cell matrices, one row per energy (or per weight row).

    weights is either one sequence shared by all rows or a 2-D array with one
    weight sequence per row. checkpoints lists step counts at which the log
    norm of the partial product is recorded.
    """
    table_w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    rows = max(table_w.shape[0], np.size(energies))
    energies = np.broadcast_to(np.asarray(energies, dtype=np.float64), (rows,))
    if table_w.shape[0] not in (1, rows):
        raise ValueError("weights rows must be 1 or match the number of energies")

    distinct, index = np.unique(table_w, return_inverse=True)
    index = index.reshape(table_w.shape)
    table = np.stack([real_cell_entries(energies, w) for w in distinct])  # (k, 4, rows)
    row_ids = np.arange(rows)

    ma = np.ones(rows)
    mb = np.zeros(rows)
    mc = np.zeros(rows)
    md = np.ones(rows)
    log_scale = np.zeros(rows)
    marks = {int(c): i for i, c in enumerate(checkpoints or [])}
    history = np.zeros((rows, len(marks))) if marks else None

    steps = table_w.shape[1]
    for j in range(steps):
        if table_w.shape[0] == 1:
            ca, cb, cc, cd = table[index[0, j]]
        else:
            entries = table[index[:, j], :, row_ids]
            ca, cb, cc, cd = entries[:, 0], entries[:, 1], entries[:, 2], entries[:, 3]
        ma, mb, mc, md = ca * ma + cb * mc, ca * mb + cb * md, cc * ma + cd * mc, cc * mb + cd * md
        peak = np.maximum(np.maximum(np.abs(ma), np.abs(mb)), np.maximum(np.abs(mc), np.abs(md)))
        big = peak > RENORM_THRESHOLD
        if big.any():
            scale = np.where(big, peak, 1.0)
            ma, mb, mc, md = ma / scale, mb / scale, mc / scale, md / scale
            log_scale = log_scale + np.log(scale)
        if history is not None and (j + 1) in marks:
            stacked = np.stack([np.stack([ma, mb], -1), np.stack([mc, md], -1)], 1)
            history[:, marks[j + 1]] = log_scale + np.log(_spectral_norms(stacked))

    matrices = np.stack([np.stack([ma, mb], -1), np.stack([mc, md], -1)], 1)
    return TransferStack(matrices=matrices, log_scale=log_scale, history=history)


# ---------------------------------------------------------------------------
# Extended precision


def mp_cell_matrix(w: int, r: "mpmath.mpc", length: float = 1.0) -> "mpmath.matrix":
    rl = r * length
    ch, sh = mpmath.cosh(rl), mpmath.sinh(rl)
    return mpmath.matrix([[ch, sh / (w * r)], [w * r * sh, ch]])


def mp_principal_root(z: complex) -> "mpmath.mpc":
    z = mpmath.mpc(z)
    if z.imag == 0 and z.real >= 0:
        return mpmath.mpc(0, -mpmath.sqrt(z.real))
    return mpmath.sqrt(-z)


def mp_monodromy(profile: WeightProfile, z: complex, x_from: float, x_to: float) -> "mpmath.matrix":
    """Transfer matrix in the current mpmath precision (no log accumulator needed)."""
    profile.check_support(x_from, x_to)
    r = mp_principal_root(z)
    m = mpmath.eye(2)
    for cell, length in _segments(min(x_from, x_to), max(x_from, x_to)):
        m = mp_cell_matrix(profile.weight(cell), r, length) * m
    if x_to < x_from:
        m = mpmath.matrix([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    return m
