"""Finite-difference ground truth for the weighted operator.

Nodes sit on a uniform grid of step h = 1/M so every vertex is a node. The
flux form

    (w_l (u_i - u_{i-1}) + w_r (u_i - u_{i+1})) / h^2  /  ((w_l + w_r) / 2)

is symmetrized by the square roots of the node masses, which leaves 2/h^2
on the diagonal and -w / (h^2 sqrt(m_i m_j)) off it.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core.errors import SupportError
from .core.generator import WeightMode
from .core.words import SymbolWindow
from .sl_core import WeightProfile, weights_from_spheres

logger = logging.getLogger(__name__)

MIN_NODES_PER_CELL = 16
RELATIVE_TOLERANCE = 1e-10


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class DiscreteOperator:
    """Symmetric tridiagonal matrix with its grid description."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray
    h: float = 1.0
    bc: Tuple[BoundaryCondition, BoundaryCondition] = (
        BoundaryCondition.DIRICHLET,
        BoundaryCondition.DIRICHLET,
    )

    def __post_init__(self) -> None:
        if len(self.off_diagonal) != max(0, len(self.diagonal) - 1):
            raise ValueError("off_diagonal must have one entry fewer than diagonal")

    @classmethod
    def from_tridiagonal(cls, diagonal: Sequence[float], off_diagonal: Sequence[float]) -> "DiscreteOperator":
        return cls(np.asarray(diagonal, dtype=np.float64), np.asarray(off_diagonal, dtype=np.float64))

    @property
    def size(self) -> int:
        return len(self.diagonal)

    def dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)


def discretize(
    profile: WeightProfile,
    x_lo: int,
    x_hi: int,
    M: int = 200,
    bc_lo: Union[BoundaryCondition, str] = BoundaryCondition.DIRICHLET,
    bc_hi: Union[BoundaryCondition, str] = BoundaryCondition.DIRICHLET,
) -> DiscreteOperator:
    if float(x_lo) != int(x_lo) or float(x_hi) != int(x_hi):
        raise SupportError(f"endpoints must be integers, got ({x_lo}, {x_hi})")
    x_lo, x_hi = int(x_lo), int(x_hi)
    if not x_lo < x_hi:
        raise SupportError(f"need x_lo < x_hi, got ({x_lo}, {x_hi})")
    if M < MIN_NODES_PER_CELL:
        raise ValueError(f"M must be >= {MIN_NODES_PER_CELL}, got {M}")
    profile.check_support(x_lo, x_hi)
    bc = (BoundaryCondition(bc_lo), BoundaryCondition(bc_hi))

    h = 1.0 / M
    # weight of segment j, between nodes j and j + 1
    seg = np.repeat([profile.weight(n) for n in range(x_lo, x_hi)], M).astype(np.float64)
    n_nodes = len(seg) + 1
    mass = np.empty(n_nodes)
    mass[1:-1] = 0.5 * (seg[:-1] + seg[1:])
    mass[0] = 0.5 * seg[0]
    mass[-1] = 0.5 * seg[-1]
    # symmetrized stiffness / mass
    off = -seg / (h * h * np.sqrt(mass[:-1] * mass[1:]))
    diag = np.full(n_nodes, 2.0 / (h * h))

    # Dirichlet ends drop the boundary node
    first = 1 if bc[0] == BoundaryCondition.DIRICHLET else 0
    last = n_nodes - 1 if bc[1] == BoundaryCondition.DIRICHLET else n_nodes
    diag = diag[first:last]
    off = off[first : last - 1]
    logger.debug("discretized [%d, %d] with M=%d: %d unknowns", x_lo, x_hi, M, len(diag))
    return DiscreteOperator(diagonal=diag, off_diagonal=off, h=h, bc=bc)


def sturm_count(op: DiscreteOperator, E: float) -> int:
    """Number of eigenvalues below E from the pivots of the LDL^T factorization of T - E."""
    d, e = op.diagonal, op.off_diagonal
    scale = max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)
    pivmin = np.finfo(float).tiny * scale
    count = 0
    q = 1.0
    for i in range(len(d)):
        q = d[i] - E - (e[i - 1] ** 2 / q if i > 0 else 0.0)
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def tridiag_eigenvalues(op: DiscreteOperator, E_lo: float, E_hi: float) -> List[float]:
    """Sorted eigenvalues in (E_lo, E_hi] by bisection on Sturm sequences."""
    if not E_lo < E_hi:
        raise ValueError(f"need E_lo < E_hi, got ({E_lo}, {E_hi})")
    if op.size == 0:
        return []
    tol = RELATIVE_TOLERANCE * max(abs(E_lo), abs(E_hi), 1.0)
    values = eigh_tridiagonal(
        op.diagonal,
        op.off_diagonal,
        eigvals_only=True,
        select="v",
        select_range=(E_lo, E_hi),
        lapack_driver="stebz",
        tol=tol,
    )
    expected = sturm_count(op, E_hi) - sturm_count(op, E_lo)
    if len(values) != expected:
        logger.warning("bisection found %d eigenvalues, Sturm count says %d", len(values), expected)
    return sorted(float(v) for v in values)


def chain_eigenvalues(
    window: SymbolWindow,
    mode: Union[WeightMode, str] = WeightMode.SIMPLIFIED,
    M: int = 200,
    E_lo: float = 0.0,
    E_hi: float = 40.0,
    bc: Tuple[Union[BoundaryCondition, str], Union[BoundaryCondition, str]] = ("dirichlet", "dirichlet"),
) -> List[float]:
    """Eigenvalues of the truncated chain built from the window's weights."""
    profile = weights_from_spheres(window, mode)
    op = discretize(profile, profile.origin, profile.end, M, *bc)
    return tridiag_eigenvalues(op, E_lo, E_hi)


def convergence_ratio(profile: WeightProfile, x_lo: int, x_hi: int, M: int, exact: float) -> float:
    """Error at M over error at 2M for the eigenvalue nearest exact; about 4 for second order."""
    errors = []
    for m in (M, 2 * M):
        op = discretize(profile, x_lo, x_hi, m)
        window = max(1.0, 0.1 * abs(exact))
        values = tridiag_eigenvalues(op, exact - window, exact + window)
        if not values:
            raise ValueError(f"no eigenvalue near {exact} at M={m}")
        errors.append(min(abs(v - exact) for v in values))
    return errors[0] / errors[1] if errors[1] > 0 else math.inf
