"""Independent computations of the same spectral objects should agree.

The finite-difference chain, the Floquet discriminant, the trace-map escape
criterion and the Lyapunov sweep each see a periodic or Fibonacci word
through different machinery.
"""

import math

import numpy as np
import pytest

from qgspec.cli.commands import flipped
from qgspec.core.bands import BandSet
from qgspec.core.words import SymbolWindow
from qgspec.lyapunov import lyapunov_estimate
from qgspec.oracle import chain_eigenvalues
from qgspec.sequences import fibonacci_spec, generate_word, periodic_spec
from qgspec.spectrum import floquet_bands, inclusion_fraction
from qgspec.tracemap import escape_band_set, escaped_by, fibonacci_number
from qgspec.weyl import borg_marchenko_decay

# D(E) = 2 - 4.5 sin^2(sqrt E) for the simplified period [1, 2]
GAP_K = math.asin(math.sqrt(8.0 / 9.0))
FIRST_GAP = (GAP_K**2, (math.pi - GAP_K) ** 2)


class TestPeriodTwo:
    """Simplified weights 1, 2 repeated."""

    def test_chain_leaves_gap_almost_empty(self):
        window = SymbolWindow.from_sequence([1, 2] * 10)
        values = chain_eigenvalues(window, "simplified", M=64, E_lo=0.0, E_hi=5.0)
        in_band = [e for e in values if e < FIRST_GAP[0]]
        in_gap = [e for e in values if FIRST_GAP[0] + 0.01 < e < FIRST_GAP[1] - 0.01]
        assert len(in_band) >= 8
        # a Dirichlet cut of a periodic chain adds at most one state per gap
        assert len(in_gap) <= 1

    def test_chain_cluster_edges_match_floquet_edges(self):
        values = np.array(
            chain_eigenvalues(SymbolWindow.from_sequence([1, 2] * 40), "simplified", M=200, E_lo=0.0, E_hi=40.0)
        )
        bands = floquet_bands(SymbolWindow.from_sequence([1, 2]), "simplified", 0.0, 40.0, tol=1e-10)
        gaps = [(lo, hi) for (_, lo), (hi, _) in zip(bands.intervals, bands.intervals[1:]) if hi - lo > 0.1]
        assert len(gaps) == 2
        for lo, hi in gaps:
            # Dirichlet states sit at D = 2 cos(j pi / 40); the outermost two of a
            # cluster lie a quadratic step inside the band, so extrapolate the edge
            below = values[values < lo + 0.01]
            above = values[values > hi - 0.01]
            top, second = below[-1], below[-2]
            bottom, next_up = above[0], above[1]
            assert top + (top - second) / 3.0 == pytest.approx(lo, abs=5e-3)
            assert bottom - (next_up - bottom) / 3.0 == pytest.approx(hi, abs=5e-3)

    def test_lyapunov_matches_discriminant(self):
        spec = periodic_spec([1, 2])
        inside = lyapunov_estimate(spec, 1.0, mode="simplified")
        assert inside.value < 0.01

        E = 2.5
        D = 2.0 - 4.5 * math.sin(math.sqrt(E)) ** 2
        expected = math.acosh(abs(D) / 2.0) / 2.0
        gap = lyapunov_estimate(spec, E, mode="simplified")
        assert gap.value == pytest.approx(expected, rel=0.01)

    def test_floquet_bands_agree_with_closed_form(self):
        bands = floquet_bands(SymbolWindow.from_sequence([1, 2]), "simplified", 0.0, 5.0, tol=1e-10)
        assert not bands.contains(0.5 * (FIRST_GAP[0] + FIRST_GAP[1]))
        assert bands.contains(FIRST_GAP[0] - 1e-3)
        assert bands.contains(FIRST_GAP[1] + 1e-3)


class TestApproximantPermanence:
    """Bands of the length-F_k prefix survive every escape test up to N = k."""

    @pytest.mark.parametrize("k", [6, 7])
    def test_band_interiors_not_escaped(self, k):
        prefix = generate_word(fibonacci_spec(), 0, fibonacci_number(k))
        bands = floquet_bands(prefix, "simplified", 0.0, 10.0, tol=1e-9)
        assert len(bands) > 3

        samples = np.array([a + f * (b - a) for a, b in bands.intervals for f in (0.25, 0.5, 0.75)])
        for N in range(5, k + 1):
            assert not escaped_by(samples, N, "simplified").any()


class TestEscapeCovers:
    def test_covers_shrink_with_n(self):
        covers = {N: escape_band_set(0.0, 40.0, N, tol=1e-4) for N in (5, 8, 12)}
        assert covers[12].is_subset_of(covers[8], slack=1e-3)
        assert covers[8].is_subset_of(covers[5], slack=1e-3)
        assert covers[12].total_measure < covers[5].total_measure


class TestInclusionChain:
    def test_b10_lies_near_approximant_bands(self):
        cover = escape_band_set(0.0, 40.0, 10, tol=1e-4)
        intervals = []
        for k in (7, 8, 9):
            prefix = generate_word(fibonacci_spec(), 0, fibonacci_number(k))
            intervals.extend(floquet_bands(prefix, "graph", 0.0, 40.0, tol=1e-9).intervals)
        approximants = BandSet(intervals=intervals)
        assert inclusion_fraction(cover, approximants, slack=1e-3, points=40_001) == 1.0


@pytest.mark.slow
def test_decay_slopes_follow_agreement_length():
    window = generate_word(fibonacci_spec(), 0, 60)
    slopes = []
    for k in range(4):
        fit = borg_marchenko_decay(window, flipped(window, k + 1))
        assert fit.k == k
        assert fit.slope <= -(k + 0.5) * 0.95
        slopes.append(fit.slope)
    assert all(b < a for a, b in zip(slopes, slopes[1:]))
