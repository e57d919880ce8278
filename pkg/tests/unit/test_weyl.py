import math

import pytest

from qgspec.cli.commands import flipped
from qgspec.core.errors import SupportError, WindowError
from qgspec.core.words import SymbolWindow
from qgspec.sequences import fibonacci_spec, generate_word
from qgspec.sl_core import WeightProfile, principal_root, weights_from_spheres
from qgspec.weyl import (
    agreement_length,
    borg_marchenko_decay,
    m_function,
    m_function_grid,
    shift_identity_residual,
    shift_mobius,
    weyl_circle_point,
    weyl_disk,
)


@pytest.fixture
def free_profile():
    return WeightProfile(origin=0, weights=(1,) * 200)


@pytest.fixture
def fibonacci_profile():
    window = generate_word(fibonacci_spec(), 0, 300)
    return weights_from_spheres(window, "simplified")


class TestWeylDisk:
    def test_disks_are_nested(self, fibonacci_profile):
        z = 0.5 + 1.0j
        outer = weyl_disk(fibonacci_profile, z, 5)
        inner = weyl_disk(fibonacci_profile, z, 10)
        assert inner.radius < outer.radius
        assert outer.contains(inner)

    def test_circle_point_lies_on_boundary(self, fibonacci_profile):
        z = 1.0j
        disk = weyl_disk(fibonacci_profile, z, 3)
        for beta in (0.0, 0.7, 2.0):
            point = weyl_circle_point(fibonacci_profile, z, 3, beta)
            assert abs(point - disk.center) == pytest.approx(disk.radius, rel=1e-6)

    def test_real_z_rejected(self, free_profile):
        with pytest.raises(ValueError):
            weyl_disk(free_profile, 2.0, 5)

    def test_short_truncation_rejected(self, free_profile):
        with pytest.raises(SupportError):
            weyl_disk(free_profile, 1j, 0.5)


class TestMFunction:
    def test_free_m_function(self, free_profile):
        z = 1.0 + 1.0j
        sample = m_function(free_profile, z)
        assert sample.converged
        assert sample.radius < 1e-8
        assert abs(sample.m - (-principal_root(z))) < 1e-6

    def test_extended_precision_agrees(self, free_profile):
        z = 2.0 + 1.0j
        double = m_function(free_profile, z)
        extended = m_function(free_profile, z, precision="extended")
        assert abs(double.m - extended.m) < 1e-8

    def test_imaginary_part_positive(self, fibonacci_profile):
        sample = m_function(fibonacci_profile, 3.0 + 0.5j)
        assert sample.m.imag > 0

    def test_short_profile_is_flagged(self):
        profile = WeightProfile(origin=0, weights=(1, 2, 1, 1, 2, 1))
        sample = m_function(profile, 1j, tol=1e-12)
        assert not sample.converged
        assert sample.b == 6

    def test_lower_half_plane_rejected(self, free_profile):
        with pytest.raises(ValueError):
            m_function(free_profile, 1.0 - 1.0j)

    def test_profile_must_cover_origin(self):
        with pytest.raises(SupportError):
            m_function(WeightProfile(origin=3, weights=(1,) * 50), 1j)

    def test_grid_rows(self, free_profile):
        samples = m_function_grid(free_profile, [1j, 1 + 1j])
        rows = [s.as_row() for s in samples]
        assert [r["Im z"] for r in rows] == [1.0, 1.0]
        assert rows[1]["Re z"] == 1.0


class TestShiftIdentity:
    def test_free_mobius_fixes_m(self):
        z = 0.3 + 2.0j
        m = -principal_root(z)
        assert abs(shift_mobius(m, 1, z) - m) < 1e-12

    @pytest.mark.parametrize("shifts", [1, 3])
    def test_residual_is_small(self, fibonacci_profile, shifts):
        assert shift_identity_residual(fibonacci_profile, 1.0 + 2.0j, shifts, tol=1e-10) < 1e-6

    def test_shifts_must_be_positive(self, fibonacci_profile):
        with pytest.raises(ValueError):
            shift_identity_residual(fibonacci_profile, 1j, 0)


class TestAgreementLength:
    def test_first_difference(self):
        a = SymbolWindow.from_sequence([1, 2, 1, 1])
        b = SymbolWindow.from_sequence([1, 2, 2, 1])
        assert agreement_length(a, b) == 1

    def test_differ_at_origin(self):
        a = SymbolWindow.from_sequence([1, 2])
        b = SymbolWindow.from_sequence([2, 2])
        assert agreement_length(a, b) == -1

    def test_identical_windows_rejected(self):
        a = SymbolWindow.from_sequence([1, 2, 1])
        with pytest.raises(WindowError):
            agreement_length(a, a)

    def test_window_must_contain_origin(self):
        a = SymbolWindow.from_sequence([1, 2, 1], origin=1)
        b = SymbolWindow.from_sequence([1, 2, 1])
        with pytest.raises(WindowError):
            agreement_length(a, b)


class TestBorgMarchenko:
    def test_bad_ray_rejected(self):
        a = SymbolWindow.from_sequence([1, 2] * 30)
        with pytest.raises(ValueError):
            borg_marchenko_decay(a, flipped(a, 4), alpha=0.0)

    def test_narrow_grid_rejected(self):
        a = SymbolWindow.from_sequence([1, 2] * 30)
        with pytest.raises(ValueError):
            borg_marchenko_decay(a, flipped(a, 4), moduli=[10.0, 50.0])

    def test_short_windows_rejected(self):
        a = SymbolWindow.from_sequence([1, 2, 1, 1, 2, 1, 2, 1])
        with pytest.raises(WindowError):
            borg_marchenko_decay(a, flipped(a, 4))

    @pytest.mark.slow
    def test_slope_tracks_agreement_length(self):
        window = generate_word(fibonacci_spec(), 0, 60)
        fit = borg_marchenko_decay(window, flipped(window, 4), alpha=math.pi / 2)
        assert fit.k == 3
        assert fit.slope <= -3.325
        assert fit.r_squared > 0.9
        assert len(fit.points) == 13
