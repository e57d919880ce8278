import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgspec.core.generator import WeightMode
from qgspec.tracemap import (
    SATURATION,
    CocycleKind,
    TraceTriple,
    escape_band_set,
    escape_index,
    escape_indices,
    escaped_by,
    explicit_half_traces,
    fibonacci_initial_traces,
    fibonacci_number,
    fricke_invariant,
    initial_half_traces,
    measure_decay_curve,
    trace_orbit,
    trace_step,
)

moderate = st.floats(-3.0, 3.0, allow_nan=False)

FIDELITY_ENERGIES = np.linspace(0.1, 40.0, 50)


def test_fibonacci_numbers():
    assert [fibonacci_number(n) for n in range(8)] == [1, 2, 3, 5, 8, 13, 21, 34]
    with pytest.raises(ValueError):
        fibonacci_number(-1)


class TestTraceStep:
    def test_fixed_point_at_one(self):
        t = TraceTriple(x_prev=1.0, x_curr=1.0, x_next=1.0, index=4)
        nxt = trace_step(t)
        assert nxt.values() == (1.0, 1.0, 1.0)
        assert nxt.index == 5

    def test_shift_order(self):
        t = TraceTriple(x_prev=0.5, x_curr=2.0, x_next=3.0, index=4)
        # x_5 = 2 x_4 x_3 - x_2
        assert trace_step(t).values() == (2.0, 3.0, 11.5)

    def test_saturation(self):
        t = TraceTriple(x_prev=0.0, x_curr=1e100, x_next=1e100, index=9)
        nxt = trace_step(t)
        assert nxt.x_next == SATURATION
        assert nxt.saturated
        assert trace_step(nxt).saturated

    @given(moderate, moderate, moderate)
    def test_fricke_invariant_is_conserved(self, x, y, z):
        t = TraceTriple(x_prev=x, x_curr=y, x_next=z, index=4)
        before = fricke_invariant(t)
        after = fricke_invariant(trace_step(t))
        scale = 1.0 + max(v * v for v in trace_step(t).values()) ** 1.5
        assert abs(after - before) <= 1e-12 * scale


class TestInitialTraces:
    def test_shape(self):
        x = initial_half_traces(np.linspace(0.0, 5.0, 7))
        assert x.shape == (3, 7)

    def test_simplified_ignores_cocycle(self):
        a = initial_half_traces([1.3, 4.0], "simplified", cocycle="verbatim")
        b = initial_half_traces([1.3, 4.0], "simplified", cocycle="canonical")
        np.testing.assert_array_equal(a, b)

    def test_free_letters_give_cosines(self):
        triple = fibonacci_initial_traces(2.0, "simplified", letters=(1, 1))
        k = math.sqrt(2.0)
        assert triple.values() == pytest.approx((math.cos(3 * k), math.cos(5 * k), math.cos(8 * k)))

    def test_zero_energy_canonical(self):
        x = initial_half_traces([0.0], "graph", cocycle="canonical")
        np.testing.assert_allclose(x[:, 0], [1.0, 1.0, 1.0])


class TestOrbit:
    def test_recursion_matches_free_cosines(self):
        orbit = trace_orbit(2.0, 12, "simplified", letters=(1, 1))
        k = math.sqrt(2.0)
        expected = [math.cos(fibonacci_number(n) * k) for n in range(2, 13)]
        assert orbit == pytest.approx(expected, abs=1e-7)

    def test_recursion_matches_explicit_products(self):
        orbit = trace_orbit(0.8, 9, "simplified")
        explicit = explicit_half_traces(0.8, 9, "simplified")
        assert orbit == pytest.approx(explicit, rel=1e-6, abs=1e-9)

    @pytest.mark.parametrize(
        "mode, cocycle",
        [("simplified", CocycleKind.CANONICAL), ("graph", CocycleKind.CANONICAL)],
    )
    def test_recursion_matches_explicit_products_up_to_sixteen(self, mode, cocycle):
        for energy in FIDELITY_ENERGIES:
            orbit = trace_orbit(float(energy), 16, mode, cocycle=cocycle)
            explicit = explicit_half_traces(float(energy), 16, mode, cocycle=cocycle)
            for n, (x, y) in enumerate(zip(orbit, explicit), start=2):
                if max(abs(x), abs(y)) > 1e100:
                    continue
                assert x == pytest.approx(y, rel=1e-8, abs=1e-8), (energy, n)

    @pytest.mark.parametrize("letters", [(1, 1), (1, 2)])
    def test_fricke_invariant_holds_over_thirty_steps(self, letters):
        for energy in np.linspace(0.1, 10.0, 25):
            orbit = trace_orbit(float(energy), 34, "simplified", letters)
            assert len(orbit) == 33
            triples = list(zip(orbit, orbit[1:], orbit[2:]))
            reference = fricke_invariant(TraceTriple(x_prev=orbit[0], x_curr=orbit[1], x_next=orbit[2], index=4))
            for x, y, z in triples:
                if max(abs(x), abs(y), abs(z)) >= 1e6:
                    break
                value = fricke_invariant(TraceTriple(x_prev=x, x_curr=y, x_next=z, index=4))
                assert abs(value - reference) <= 1e-8 * (1.0 + max(x * x, y * y, z * z))

    def test_zero_energy_stays_at_one(self):
        assert trace_orbit(0.0, 20, "simplified") == [1.0] * 19

    def test_orbit_needs_recursion_start(self):
        with pytest.raises(ValueError):
            trace_orbit(1.0, 3)

    def test_explicit_verbatim_traces_are_finite(self):
        traces = explicit_half_traces(-3.0, 12, "graph", cocycle=CocycleKind.VERBATIM)
        assert len(traces) == 11
        assert all(math.isfinite(x) for x in traces)


class TestEscape:
    def test_negative_energy_escapes(self):
        report = escape_index(-1.0, N_max=20, mode="simplified")
        assert report.escaped
        assert report.index is not None and report.index + 1 <= 20
        assert report.permanence_verified
        assert report.mode == WeightMode.SIMPLIFIED

    def test_zero_energy_never_escapes(self):
        report = escape_index(0.0, N_max=20, mode="simplified")
        assert not report.escaped
        assert report.index is None
        assert report.max_abs == 1.0

    def test_escaped_by_is_monotone_in_n(self):
        grid = np.linspace(0.0, 6.0, 301)
        previous = escaped_by(grid, 5)
        for N in range(6, 10):
            current = escaped_by(grid, N)
            assert not np.any(previous & ~current)
            previous = current

    def test_mask_agrees_with_escape_index(self):
        energies = [-1.0, 0.0, 0.4, 2.5, 7.0]
        mask = escaped_by(np.array(energies), 12, "simplified")
        for energy, flag in zip(energies, mask):
            report = escape_index(energy, N_max=12, mode="simplified")
            assert report.escaped == bool(flag)

    def test_indices_match_escape_index(self):
        energies = [-1.0, 0.4, 2.5, 7.0]
        first = escape_indices(np.array(energies), 12, "simplified")
        for energy, index in zip(energies, first):
            report = escape_index(energy, N_max=12, mode="simplified")
            expected = report.index + 1 if report.escaped else 13
            assert int(index) == expected


class TestBandCover:
    def test_cover_is_nested_in_n(self):
        coarse = escape_band_set(0.0, 5.0, 6, tol=1e-5, mode="simplified")
        fine = escape_band_set(0.0, 5.0, 8, tol=1e-5, mode="simplified")
        assert fine.is_subset_of(coarse, slack=1e-4)
        assert fine.total_measure <= coarse.total_measure + 1e-4

    def test_cover_contains_zero_energy(self):
        cover = escape_band_set(0.0, 2.0, 7, tol=1e-5, mode="simplified")
        assert cover.contains(0.0)
        assert cover.tol == 1e-5
        assert "N=7" in cover.provenance

    def test_cover_keeps_every_alive_point_of_a_dense_scan(self):
        tol = 1e-4
        cover = escape_band_set(0.0, 5.0, 12, tol=tol)
        dense = np.linspace(0.0, 5.0, 250_001)
        alive = dense[~escaped_by(dense, 12)]
        assert alive.size
        missed = [float(e) for e in alive if not cover.contains(float(e), tol)]
        assert missed == []

    def test_graph_covers_use_the_canonical_cocycle(self):
        default = escape_band_set(0.0, 5.0, 8, tol=1e-4)
        canonical = escape_band_set(0.0, 5.0, 8, tol=1e-4, cocycle=CocycleKind.CANONICAL)
        assert default.intervals == canonical.intervals

    def test_negative_range_is_empty(self):
        assert escape_band_set(-3.0, -1.0, 8, mode="simplified").is_empty

    def test_budget_flags_conservative(self):
        cover = escape_band_set(0.0, 5.0, 8, tol=1e-9, mode="simplified", max_evaluations=1100)
        assert cover.conservative

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            escape_band_set(1.0, 0.0, 8)
        with pytest.raises(ValueError):
            escape_band_set(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            escape_band_set(0.0, 1.0, 8, tol=0.0)

    def test_measure_curve_shrinks(self):
        curve = measure_decay_curve(0.0, 5.0, [8, 6, 7], tol=1e-5, mode="simplified")
        assert [n for n, _ in curve] == [6, 7, 8]
        measures = [m for _, m in curve]
        assert measures[1] <= measures[0] + 1e-3
        assert measures[2] <= measures[1] + 1e-3
