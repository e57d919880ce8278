import math

import numpy as np
import pytest

from qgspec.core.errors import SupportError
from qgspec.core.words import SymbolWindow
from qgspec.oracle import (
    BoundaryCondition,
    DiscreteOperator,
    chain_eigenvalues,
    convergence_ratio,
    discretize,
    sturm_count,
    tridiag_eigenvalues,
)
from qgspec.sl_core import WeightProfile


@pytest.fixture
def small_operator():
    # eigenvalues 2 - sqrt 2, 2, 2 + sqrt 2
    return DiscreteOperator.from_tridiagonal([2.0, 2.0, 2.0], [-1.0, -1.0])


def test_free_chain_eigenvalues():
    window = SymbolWindow.from_sequence([1, 1, 1, 1])
    values = chain_eigenvalues(window, "simplified", M=200, E_lo=0.0, E_hi=10.0)
    expected = [(j * math.pi / 4) ** 2 for j in range(1, 5)]
    assert values == pytest.approx(expected, abs=1e-3)


def test_second_order_convergence():
    profile = WeightProfile(origin=0, weights=(1, 1))
    ratio = convergence_ratio(profile, 0, 2, 32, (math.pi / 2) ** 2)
    assert ratio == pytest.approx(4.0, rel=0.02)


def test_bisection_matches_dense_solver():
    profile = WeightProfile(origin=0, weights=(1, 2, 1))
    op = discretize(profile, 0, 3, M=16)
    dense = np.linalg.eigvalsh(op.dense())
    expected = sorted(v for v in dense if 0.0 < v <= 200.0)
    assert tridiag_eigenvalues(op, 0.0, 200.0) == pytest.approx(expected, abs=1e-6)


def test_neumann_ends_keep_constant_mode():
    profile = WeightProfile(origin=0, weights=(1, 2))
    op = discretize(profile, 0, 2, M=32, bc_lo="neumann", bc_hi=BoundaryCondition.NEUMANN)
    assert op.size == 65
    values = tridiag_eigenvalues(op, -1.0, 1.0)
    assert abs(values[0]) < 1e-6


def test_sturm_count(small_operator):
    assert sturm_count(small_operator, 1.0) == 1
    assert sturm_count(small_operator, 2.5) == 2
    assert sturm_count(small_operator, 4.0) == 3
    assert sturm_count(small_operator, -1.0) == 0


def test_small_operator_values(small_operator):
    values = tridiag_eigenvalues(small_operator, 0.0, 4.0)
    assert values == pytest.approx([2 - math.sqrt(2), 2.0, 2 + math.sqrt(2)])


class TestDiscretizeValidation:
    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            discretize(WeightProfile(origin=0, weights=(1, 1)), 0, 2, M=8)

    def test_fractional_endpoint(self):
        with pytest.raises(SupportError):
            discretize(WeightProfile(origin=0, weights=(1, 1)), 0.5, 2)

    def test_outside_support(self):
        with pytest.raises(SupportError):
            discretize(WeightProfile(origin=0, weights=(1, 1)), 0, 3)

    def test_empty_range(self):
        with pytest.raises(SupportError):
            discretize(WeightProfile(origin=0, weights=(1, 1)), 1, 1)

    def test_mismatched_tridiagonal(self):
        with pytest.raises(ValueError):
            DiscreteOperator.from_tridiagonal([1.0, 2.0], [0.5, 0.5])

    def test_empty_energy_range(self, small_operator):
        with pytest.raises(ValueError):
            tridiag_eigenvalues(small_operator, 1.0, 1.0)
