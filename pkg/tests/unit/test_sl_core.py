import cmath
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgspec.core.errors import SupportError, WindowError
from qgspec.core.generator import WeightMode
from qgspec.core.words import SymbolWindow
from qgspec.sequences import fibonacci_spec, generate_word
from qgspec.sl_core import (
    Mat2,
    SpectralParameter,
    StateVector,
    WeightProfile,
    _unimodularize,
    asymptotic_residual,
    asymptotic_residuals,
    cell_matrix,
    dirichlet_neumann,
    growth_coefficient,
    monodromy,
    mp_monodromy,
    verbatim_cocycle,
    verbatim_step_entries,
    verbatim_step_matrix,
    principal_root,
    propagate,
    read_profile,
    transfer_stack,
    weights_from_spheres,
    write_profile,
    wronskian,
)

complex_z = st.complex_numbers(min_magnitude=0.1, max_magnitude=50.0, allow_nan=False)


@pytest.fixture
def fib_profile():
    return weights_from_spheres(generate_word(fibonacci_spec(), 0, 40), WeightMode.SIMPLIFIED)


class TestWeights:
    def test_graph_weights_are_pair_products(self):
        window = SymbolWindow(origin=-1, data=(1, 2, 1, 1))
        profile = weights_from_spheres(window, "graph")
        assert profile.origin == -1
        assert profile.weights == (2, 2, 1)
        assert profile.end == 2

    def test_simplified_weights_copy_the_word(self):
        window = SymbolWindow(origin=0, data=(1, 2, 1))
        assert weights_from_spheres(window, WeightMode.SIMPLIFIED).weights == (1, 2, 1)

    def test_graph_mode_needs_two_symbols(self):
        with pytest.raises(WindowError):
            weights_from_spheres(SymbolWindow(origin=0, data=(2,)), WeightMode.GRAPH)

    def test_support_checks(self):
        profile = WeightProfile(origin=0, weights=(1, 2))
        with pytest.raises(SupportError):
            profile.weight(2)
        with pytest.raises(SupportError):
            profile.check_support(0.0, 2.5)
        assert profile.shifted(1).weight(-1) == 1

    def test_profile_file(self, tmp_path):
        profile = WeightProfile(origin=-2, weights=(2, 4, 2), mode=WeightMode.GRAPH)
        path = tmp_path / "profile.txt"
        write_profile(profile, path)
        loaded = read_profile(path)
        assert loaded == profile
        assert loaded.mode == WeightMode.GRAPH


class TestSpectralParameter:
    def test_root_on_positive_axis(self):
        assert principal_root(4.0) == complex(0.0, -2.0)

    @given(complex_z)
    def test_root_has_nonnegative_real_part(self, z):
        r = principal_root(z)
        assert r.real >= 0.0
        assert r * r == pytest.approx(-z, rel=1e-12, abs=1e-12)

    def test_energy_view(self):
        sp = SpectralParameter.from_energy(2.5)
        assert sp.is_real
        assert sp.energy == 2.5


class TestCellMatrices:
    @settings(max_examples=50)
    @given(complex_z, st.sampled_from([1.0, 2.0, 4.0]), st.floats(0.1, 1.0))
    def test_cells_are_unimodular(self, z, w, length):
        m = cell_matrix(w, SpectralParameter(z), length)
        assert abs(m.det - 1.0) < 1e-8 * max(1.0, m.max_abs() ** 2)

    def test_zero_energy_cell(self):
        m = cell_matrix(2.0, SpectralParameter(0.0))
        assert m.is_close(Mat2(1.0, 0.5, 0.0, 1.0))

    def test_free_cell_is_rotation(self):
        m = cell_matrix(1.0, SpectralParameter.from_energy(4.0))
        assert m.a == pytest.approx(math.cos(2.0))
        assert m.b == pytest.approx(math.sin(2.0) / 2.0)
        assert m.c == pytest.approx(-2.0 * math.sin(2.0))

    def test_nonpositive_length_rejected(self):
        with pytest.raises(ValueError):
            cell_matrix(1.0, SpectralParameter(1j), 0.0)

    def test_large_drift_is_renormalized_with_warning(self, caplog):
        drifted = Mat2(1.0 + 1e-4, 0.5, 0.0, 1.0)
        with caplog.at_level(logging.WARNING, logger="qgspec.sl_core"):
            fixed = _unimodularize(drifted)
        assert abs(fixed.det - 1.0) < 1e-12
        assert "determinant drifted" in caplog.text

    def test_small_drift_is_renormalized_quietly(self, caplog):
        with caplog.at_level(logging.WARNING, logger="qgspec.sl_core"):
            fixed = _unimodularize(Mat2(1.0 + 1e-9, 0.0, 0.0, 1.0))
        assert abs(fixed.det - 1.0) < 1e-12
        assert caplog.text == ""

    def test_large_entries_are_not_rescaled(self):
        # det of cosh/sinh entries near 1e13 is lost to cancellation
        m = cell_matrix(1.0, SpectralParameter(-900.0))
        assert m.a.real == pytest.approx(math.cosh(30.0), rel=1e-12)
        assert m.c.real == pytest.approx(30.0 * math.sinh(30.0), rel=1e-12)


class TestMonodromy:
    def test_backward_is_inverse(self, fib_profile):
        sp = SpectralParameter(3.0 + 0.5j)
        forward = monodromy(fib_profile, sp, 0.5, 7.25).value()
        backward = monodromy(fib_profile, sp, 7.25, 0.5).value()
        assert (backward @ forward).is_close(Mat2.identity(), 1e-8)

    def test_composition(self, fib_profile):
        sp = SpectralParameter(-2.0 + 1.0j)
        whole = monodromy(fib_profile, sp, 0.0, 5.0).value()
        parts = monodromy(fib_profile, sp, 2.5, 5.0).value() @ monodromy(
            fib_profile, sp, 0.0, 2.5
        ).value()
        assert whole.is_close(parts, 1e-9)

    def test_log_scale_keeps_large_products(self):
        profile = WeightProfile(origin=0, weights=(1,) * 60)
        mono = monodromy(profile, SpectralParameter(-1.0), 0.0, 60.0)
        assert mono.log_scale > 0
        assert mono.log_norm() == pytest.approx(60.0, abs=1.0)

    def test_free_dirichlet_solution(self):
        profile = WeightProfile(origin=0, weights=(1, 1))
        pair = dirichlet_neumann(profile, SpectralParameter.from_energy(4.0), 1.5)
        assert pair.phi == pytest.approx(math.sin(3.0) / 2.0)
        assert pair.theta == pytest.approx(math.cos(3.0))
        assert pair.wronskian == pytest.approx(-1.0)

    def test_propagate_conserves_wronskian(self, fib_profile):
        sp = SpectralParameter(1.0 + 2.0j)
        f, g = StateVector(1.0, 0.3j), StateVector(-0.2, 1.0)
        before = wronskian(f, g)
        after = wronskian(
            propagate(fib_profile, sp, 0.0, 9.3, f), propagate(fib_profile, sp, 0.0, 9.3, g)
        )
        assert after == pytest.approx(before, rel=1e-8)

    def test_extended_precision_agrees(self, fib_profile):
        z = 2.0 + 1.0j
        double = monodromy(fib_profile, SpectralParameter(z), 0.0, 6.5).value()
        extended = mp_monodromy(fib_profile, z, 0.0, 6.5)
        assert complex(extended[0, 1]) == pytest.approx(double.b, rel=1e-10)
        assert complex(extended[1, 1]) == pytest.approx(double.d, rel=1e-10)


class TestTransferStack:
    def test_matches_scalar_products(self):
        weights = [1.0, 2.0, 2.0, 1.0, 4.0]
        energies = np.array([-1.5, 0.0, 0.7, 12.0])
        stack = transfer_stack(weights, energies)
        profile = WeightProfile(origin=0, weights=(1, 2, 2, 1, 4))
        for row, energy in enumerate(energies):
            m = monodromy(profile, SpectralParameter.from_energy(energy), 0.0, 5.0).value()
            assert stack.traces()[row] == pytest.approx(m.trace.real, rel=1e-9, abs=1e-12)

    def test_per_row_weights(self):
        weights = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
        stack = transfer_stack(weights, [4.0, 4.0])
        # constant weight: half trace cos(3 sqrt(E)) whatever w is
        assert stack.half_traces() == pytest.approx([math.cos(6.0)] * 2)

    def test_checkpoint_history(self):
        stack = transfer_stack([1.0] * 200, -1.0, checkpoints=[100, 200])
        assert stack.history is not None
        assert stack.history.shape == (1, 2)
        assert stack.history[0, 1] == pytest.approx(stack.log_norms()[0])
        assert stack.history[0, 1] - stack.history[0, 0] == pytest.approx(100.0, abs=1e-6)

    def test_mismatched_rows_rejected(self):
        with pytest.raises(ValueError):
            transfer_stack(np.ones((3, 4)), [1.0, 2.0])


class TestNormalizedCocycle:
    @pytest.mark.parametrize("energy", [-2.0, 0.0, 3.5, 30.0])
    def test_step_is_unimodular(self, energy):
        assert verbatim_step_matrix(energy, 1, 2).det == pytest.approx(1.0)

    def test_vectorized_entries(self):
        energies = np.array([-2.0, 0.0, 3.5, 30.0])
        table = verbatim_step_entries(energies, 2, 1)
        for i, energy in enumerate(energies):
            m = verbatim_step_matrix(energy, 2, 1)
            assert table[:, i] == pytest.approx([m.a.real, m.b.real, m.c.real, m.d.real])

    def test_window_must_cover_steps(self):
        window = generate_word(fibonacci_spec(), 0, 10)
        verbatim_cocycle(window, 1.0, 8)
        with pytest.raises(WindowError):
            verbatim_cocycle(window, 1.0, 9)

    def test_negative_steps_invert(self):
        window = generate_word(fibonacci_spec(), -10, 30)
        forward = verbatim_cocycle(window, 2.0, 5, base=-5)
        backward = verbatim_cocycle(window, 2.0, -5, base=0)
        assert (forward @ backward).is_close(Mat2.identity(), 1e-9)


class TestAsymptotics:
    def test_growth_coefficient(self):
        window = SymbolWindow(origin=0, data=(1, 2, 1))
        # (2 + 1) / 4 * (1 + 2) / 2
        assert growth_coefficient(window, 2) == pytest.approx(1.125)
        assert growth_coefficient(window, 0) == 1.0

    def test_ratios_tend_to_one(self):
        window = generate_word(fibonacci_spec(), 0, 10)
        ratios = asymptotic_residuals(window, 3.5, -1e6)
        for value in (ratios.phi, ratios.phi_prime, ratios.theta, ratios.theta_prime):
            assert abs(value - 1.0) < 1e-2

    def test_phi_residual_shrinks_as_z_grows(self):
        window = generate_word(fibonacci_spec(), 0, 10)
        near = abs(asymptotic_residual(window, 3.5, -10.0) - 1.0)
        far = abs(asymptotic_residual(window, 3.5, -100.0) - 1.0)
        assert near < 0.05
        assert far < 1e-4
        assert far < near

    def test_integer_points_rejected(self):
        window = generate_word(fibonacci_spec(), 0, 10)
        with pytest.raises(ValueError):
            asymptotic_residuals(window, 3.0, -100.0)
        with pytest.raises(ValueError):
            asymptotic_residuals(window, 2.5, 100.0)

    def test_principal_branch_cmath(self):
        assert principal_root(-4.0) == cmath.sqrt(4.0)
