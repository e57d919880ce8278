"""Weyl disks, the half-line m-function and its large-|z| asymptotics.

With theta(0) = 1, (w theta')(0) = 0 and phi(0) = 0, (w phi')(0) = 1, the
solution psi = theta + m phi is square integrable. Truncating at b, the
admissible values of m fill the disk with

    center = -W(theta, conj phi)(b) / W(phi, conj phi)(b)
    radius = 1 / |W(phi, conj phi)(b)|

where W(f, g) = f (w g') - (w f') g and conj acts on function values only.
"""

import cmath
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from .core.errors import ConvergenceError, SupportError, WindowError
from .core.generator import WeightMode
from .core.words import SymbolWindow
from .sl_core import (
    SpectralParameter,
    WeightProfile,
    monodromy,
    mp_monodromy,
    principal_root,
    weights_from_spheres,
)

logger = logging.getLogger(__name__)

MIN_WRONSKIAN = 1e-300
EXTENDED_DPS = 50


class WeylDisk(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    z: complex
    b: float = Field(gt=0.0)
    center: complex
    radius: float = Field(gt=0.0)

    def contains(self, other: "WeylDisk", slack: float = 1e-12) -> bool:
        return abs(other.center - self.center) + other.radius <= self.radius + slack


class MFunctionSample(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    z: complex
    m: complex
    radius: float = Field(ge=0.0, description="Rigorous bound on |m - m_true|")
    b: float
    converged: bool = True

    def as_row(self) -> Dict[str, float]:
        return {
            "Re z": self.z.real,
            "Im z": self.z.imag,
            "Re m": self.m.real,
            "Im m": self.m.imag,
            "radius_bound": self.radius,
            "b": self.b,
        }


class DecayFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(description="Largest index with agreement on 0..k")
    alpha: float
    slope: float
    r_squared: float
    points: List[Tuple[float, float]] = Field(description="(2 Re sqrt(-z), log|m - m~|)")
    mode: WeightMode = WeightMode.SIMPLIFIED


def _check_off_axis(z: complex) -> complex:
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError(f"z must have nonzero imaginary part, got {z}")
    return z


def weyl_disk(profile: WeightProfile, z: complex, b: float) -> WeylDisk:
    z = _check_off_axis(z)
    if b < 1:
        raise SupportError(f"truncation point b must be >= 1, got {b}")
    mono = monodromy(profile, SpectralParameter(z), 0.0, b)
    m = mono.matrix
    theta, theta_p, phi, phi_p = m.a, m.c, m.b, m.d
    w_phi = phi * phi_p.conjugate() - phi_p * phi.conjugate()
    w_theta_phi = theta * phi_p.conjugate() - theta_p * phi.conjugate()
    # both Wronskians carry the factor exp(2 log_scale)
    log_abs = math.log(abs(w_phi)) + 2.0 * mono.log_scale if w_phi != 0 else -math.inf
    if log_abs < math.log(MIN_WRONSKIAN):
        raise ConvergenceError(f"degenerate Wronskian at z={z}, b={b}")
    return WeylDisk(z=z, b=b, center=-w_theta_phi / w_phi, radius=math.exp(-log_abs))


def weyl_circle_point(profile: WeightProfile, z: complex, b: float, beta: float) -> complex:
    """m(z, b, beta): the point of the Weyl circle selected by the boundary angle beta at b."""
    mono = monodromy(profile, SpectralParameter(_check_off_axis(z)), 0.0, b)
    m = mono.matrix
    cos_b, sin_b = math.cos(beta), math.sin(beta)
    return -(m.a * cos_b + m.c * sin_b) / (m.b * cos_b + m.d * sin_b)


def _initial_b(z: complex, profile: WeightProfile) -> float:
    re_r = principal_root(z).real
    return min(float(profile.end), max(4.0, 20.0 / re_r))


def m_function(
    profile: WeightProfile, z: complex, tol: float = 1e-8, precision: str = "double"
) -> MFunctionSample:
    """Disk center at a truncation b grown geometrically until radius < tol.

    precision="extended" recomputes the final center in 50-digit arithmetic.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError(f"m_function needs Im z > 0, got {z}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if profile.origin > 0 or profile.end < 1:
        raise SupportError(f"profile [{profile.origin}, {profile.end}) must cover [0, 1]")
    b = max(1.0, _initial_b(z, profile))
    while True:
        disk = weyl_disk(profile, z, b)
        if disk.radius < tol:
            center = disk.center
            if precision == "extended":
                with mpmath.workdps(EXTENDED_DPS):
                    center = complex(_mp_center(profile, z, b))
            return MFunctionSample(z=z, m=center, radius=disk.radius, b=b)
        if b >= profile.end:
            logger.warning("m(%s) unconverged: radius %.3g at b=%g (profile end)", z, disk.radius, b)
            return MFunctionSample(z=z, m=disk.center, radius=disk.radius, b=b, converged=False)
        b = min(2.0 * b, float(profile.end))


def m_function_grid(
    profile: WeightProfile,
    points: Sequence[complex],
    tol: float = 1e-8,
    precision: str = "double",
) -> List[MFunctionSample]:
    return [m_function(profile, z, tol, precision) for z in points]


# ---------------------------------------------------------------------------
# Shift identity


def shift_mobius(m: complex, w0: float, z: complex) -> complex:
    """m-function of the once-shifted profile, given m of the original and its first weight w0."""
    r = principal_root(complex(z))
    ch, sh = cmath.cosh(r), cmath.sinh(r)
    return (m * ch + w0 * r * sh) / (m * sh / (w0 * r) + ch)


def shift_identity_residual(profile: WeightProfile, z: complex, shifts: int = 1, tol: float = 1e-8) -> float:
    """|m(T^k s) - Moebius^k(m(s))| with both sides computed independently."""
    if shifts < 1:
        raise ValueError(f"shifts must be >= 1, got {shifts}")
    base = m_function(profile, z, tol)
    moved = m_function(profile.shifted(shifts), z, tol)
    if not (base.converged and moved.converged):
        raise ConvergenceError(f"m-function unconverged at z={z}; lengthen the profile")
    image = base.m
    for j in range(shifts):
        image = shift_mobius(image, profile.weight(j), z)
    return abs(moved.m - image)


# ---------------------------------------------------------------------------
# Local Borg-Marchenko decay


def agreement_length(a: SymbolWindow, b: SymbolWindow) -> int:
    """Largest k with a_j = b_j for 0 <= j <= k; -1 when they differ at 0."""
    hi = min(a.end, b.end)
    if not (a.covers(0, 0) and b.covers(0, 0)):
        raise WindowError("both windows must contain index 0")
    k = -1
    for j in range(hi):
        if a.at(j) != b.at(j):
            return k
        k = j
    raise WindowError(f"windows agree on their whole common range 0..{hi - 1}; nothing decays")


def _mp_center(profile: WeightProfile, z: complex, b: float) -> "mpmath.mpc":
    m = mp_monodromy(profile, z, 0.0, b)
    theta, theta_p, phi, phi_p = m[0, 0], m[1, 0], m[0, 1], m[1, 1]
    w_phi = phi * mpmath.conj(phi_p) - phi_p * mpmath.conj(phi)
    w_theta_phi = theta * mpmath.conj(phi_p) - theta_p * mpmath.conj(phi)
    return -w_theta_phi / w_phi


def borg_marchenko_decay(
    window1: SymbolWindow,
    window2: SymbolWindow,
    alpha: float = math.pi / 2,
    moduli: Optional[Sequence[float]] = None,
    mode: WeightMode = WeightMode.SIMPLIFIED,
) -> DecayFit:
    """Slope of log|m - m~| against 2 Re sqrt(-z) along the ray arg z = alpha.

    Windows agreeing on 0..k give a slope close to -(k + 1).
    """
    if not (-math.pi < alpha < math.pi) or alpha == 0.0:
        raise ValueError(f"ray angle must lie in (-pi, pi) minus 0, got {alpha}")
    grid = np.logspace(1, 4, 13) if moduli is None else np.asarray(moduli, dtype=np.float64)
    if grid.min() <= 0 or grid.max() / grid.min() < 100:
        raise ValueError("the |z| grid must be positive and span at least two decades")
    k = agreement_length(window1, window2)
    p1 = weights_from_spheres(window1, mode)
    p2 = weights_from_spheres(window2, mode)
    reach = k + 1

    points = []
    for modulus in grid:
        z = complex(modulus * math.cos(alpha), modulus * math.sin(alpha))
        re_r = principal_root(z).real
        b = reach + 1 + max(4.0, 20.0 / re_r)
        if b > min(p1.end, p2.end):
            raise WindowError(f"windows too short: need cells up to {b:.1f} at |z|={modulus:g}")
        dps = int(2 * (reach + 1) * re_r / math.log(10)) + 30
        with mpmath.workdps(dps):
            diff = abs(_mp_center(p1, z, b) - _mp_center(p2, z, b))
            points.append((2.0 * re_r, float(mpmath.log(diff))))
        logger.debug("|z|=%g: log|m - m~| = %.3f (dps %d)", modulus, points[-1][1], dps)

    xs, ys = zip(*points)
    fit = stats.linregress(xs, ys)
    return DecayFit(
        k=k,
        alpha=alpha,
        slope=float(fit.slope),
        r_squared=float(fit.rvalue**2),
        points=points,
        mode=mode,
    )
