import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from sawtooth.errors import FitFailure, InvalidArgument, UndefinedResult
from sawtooth.spectral_stats import (
    SpacingHistogram,
    alpha_indicator,
    brody,
    brody_b,
    brody_fit,
    histogram,
    peak_position,
    poisson,
    r_statistic,
    sample_poisson_spacings,
    sample_wigner_dyson_spacings,
    unfold,
    wigner_dyson,
)

EDGES = np.linspace(0.0, 5.0, 51)
CENTRES = 0.5 * (EDGES[:-1] + EDGES[1:])


def test_reference_densities_normalized():
    for pdf in (wigner_dyson, poisson):
        total, _ = integrate.quad(pdf, 0, np.inf)
        assert total == pytest.approx(1.0, abs=1e-10)
    mean, _ = integrate.quad(lambda s: s * wigner_dyson(s), 0, np.inf)
    assert mean == pytest.approx(1.0, abs=1e-10)


class TestUnfold:
    def test_poisson_sample(self):
        rng = np.random.default_rng(11)
        levels = np.cumsum(sample_poisson_spacings(10_000, rng))
        u = unfold(levels)
        assert u.method.startswith("polynomial")
        assert u.spacings.mean() == pytest.approx(1.0, abs=1e-10)
        assert u.spacings.var() == pytest.approx(1.0, rel=0.05)
        assert u.n_dropped == 2 * round(0.025 * 10_000)

    def test_equal_spacing(self):
        u = unfold(np.arange(400) * 0.37 - 12.0)
        assert np.abs(u.spacings - 1.0).max() < 1e-8

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.01, 100.0), st.floats(-100.0, 100.0))
    def test_affine_invariance(self, a, b):
        rng = np.random.default_rng(5)
        levels = np.sort(rng.normal(size=600))
        assert np.abs(unfold(a * levels + b).spacings - unfold(levels).spacings).max() < 1e-8

    def test_too_few_levels(self):
        with pytest.raises(InvalidArgument):
            unfold(np.arange(40.0))

    def test_fallback_on_non_monotone_staircase(self):
        # five dense clusters far apart: the polynomial wiggles between steps
        rng = np.random.default_rng(2)
        levels = np.concatenate([k * 100 + np.sort(rng.random(60)) for k in range(5)])
        u = unfold(levels)
        assert u.method.startswith("local-mean")
        assert u.spacings.mean() == pytest.approx(1.0)
        assert np.all(u.spacings >= 0)

    def test_degenerate_levels_give_zero_spacings(self):
        levels = np.repeat(np.arange(200.0), 2)
        u = unfold(levels)
        assert np.sum(u.spacings == 0) >= 150


class TestHistogram:
    def test_single_value(self):
        h = histogram(np.ones(50))
        assert h.densities[10] == pytest.approx(10.0)
        assert np.count_nonzero(h.densities) == 1
        assert h.bin_edges[10] <= 1.0 < h.bin_edges[11]

    def test_normalization(self):
        h = histogram(sample_poisson_spacings(1000, np.random.default_rng(0)))
        assert np.sum(h.densities) * h.width == pytest.approx(1.0, abs=1e-10)
        assert np.all(h.densities >= 0)

    @pytest.mark.parametrize(
        "sampler, cdf",
        [
            (sample_poisson_spacings, lambda s: 1 - np.exp(-s)),
            (sample_wigner_dyson_spacings, lambda s: 1 - np.exp(-np.pi * s**2 / 4)),
        ],
    )
    def test_synthetic_samples_within_multinomial_bands(self, sampler, cdf):
        n = 50_000
        s = sampler(n, np.random.default_rng(7))
        h = histogram(s)
        in_range = np.sum(s < 5.0)
        p = np.diff(cdf(EDGES)) / cdf(5.0)
        counts = h.densities * h.width * in_range
        sigma = np.sqrt(in_range * p * (1 - p))
        assert np.all(np.abs(counts - in_range * p) <= 3 * sigma + 1e-9)

    def test_empty_range(self):
        with pytest.raises(InvalidArgument):
            histogram(np.array([7.0, 8.0]))


def _exact(pdf):
    return SpacingHistogram(EDGES, pdf(CENTRES))


class TestAlpha:
    def test_zero_for_wigner_dyson(self):
        assert alpha_indicator(_exact(wigner_dyson)) == 0.0

    def test_poisson_limit(self):
        assert alpha_indicator(_exact(poisson)) == pytest.approx(0.615, abs=0.03)

    def test_non_negative(self):
        h = histogram(sample_poisson_spacings(500, np.random.default_rng(1)))
        assert alpha_indicator(h) >= 0


class TestBrody:
    def test_closed_forms(self):
        s = np.linspace(0, 6, 301)
        assert brody_b(0.0) == pytest.approx(1.0, abs=1e-15)
        assert brody_b(1.0) == pytest.approx(np.pi / 4, abs=1e-15)
        assert np.abs(brody(s, 0.0) - np.exp(-s)).max() < 1e-12
        assert np.abs(brody(s, 1.0) - wigner_dyson(s)).max() < 1e-12

    @pytest.mark.parametrize("beta", [0.0, 0.3, 0.7, 1.0])
    def test_normalized_with_unit_mean(self, beta):
        norm, _ = integrate.quad(lambda s: brody(s, beta), 0, np.inf)
        mean, _ = integrate.quad(lambda s: s * brody(s, beta), 0, np.inf)
        assert norm == pytest.approx(1.0, abs=1e-8)
        assert mean == pytest.approx(1.0, abs=1e-8)

    def test_recovers_wigner_dyson(self):
        s = sample_wigner_dyson_spacings(5000, np.random.default_rng(21))
        assert brody_fit(s) == pytest.approx(1.0, abs=0.05)

    def test_recovers_poisson(self):
        s = sample_poisson_spacings(5000, np.random.default_rng(22))
        assert brody_fit(s) == pytest.approx(0.0, abs=0.05)

    def test_recovers_intermediate_beta(self):
        # inverse CDF of the Brody law: s = (-ln(1-u)/b)^(1/(beta+1))
        beta = 0.5
        u = np.random.default_rng(23).random(5000)
        s = (-np.log1p(-u) / brody_b(beta)) ** (1 / (beta + 1))
        assert brody_fit(s) == pytest.approx(beta, abs=0.05)

    def test_scale_invariant(self):
        s = sample_wigner_dyson_spacings(2000, np.random.default_rng(4))
        assert brody_fit(3.7 * s) == pytest.approx(brody_fit(s), abs=1e-4)

    def test_failures(self):
        with pytest.raises(FitFailure):
            brody_fit(np.ones(500))
        with pytest.raises(InvalidArgument):
            brody_fit(np.ones(20))


class TestPeak:
    def test_wigner_dyson_peak(self):
        assert abs(peak_position(_exact(wigner_dyson)) - np.sqrt(2 / np.pi)) <= 0.1

    def test_poisson_peak_is_first_bin(self):
        assert peak_position(_exact(poisson)) == pytest.approx(0.05)

    def test_ties_go_low(self):
        h = SpacingHistogram(np.linspace(0, 0.3, 4), np.array([1.0, 2.0, 2.0]))
        assert peak_position(h) == pytest.approx(0.15)


class TestRatio:
    def test_equal_spacing(self):
        assert r_statistic(np.arange(100.0)).mean == pytest.approx(1.0)

    def test_poisson_value(self):
        levels = np.cumsum(sample_poisson_spacings(100_000, np.random.default_rng(8)))
        assert r_statistic(levels).mean == pytest.approx(0.386, abs=0.005)

    def test_degeneracies_are_excluded_and_counted(self):
        levels = np.array([0.0, 1.0, 1.0, 3.0, 4.0, 4.0, 4.0, 7.0])
        r = r_statistic(levels)
        assert r.n_degenerate == 3
        # unique levels 0,1,3,4,7 -> gaps 1,2,1,3
        assert r.mean == pytest.approx(np.mean([0.5, 0.5, 1 / 3]))

    def test_undefined(self):
        with pytest.raises(UndefinedResult):
            r_statistic(np.zeros(10))
        with pytest.raises(InvalidArgument):
            r_statistic(np.array([0.0, 1.0]))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-3, 1e3), st.floats(-1e3, 1e3), st.integers(0, 2**31))
    def test_affine_invariance_and_range(self, a, b, seed):
        levels = np.sort(np.random.default_rng(seed).normal(size=300))
        base = r_statistic(levels)
        moved = r_statistic(a * levels + b)
        # rounding of the shifted levels relative to the smallest shifted gap
        eps = np.finfo(float).eps
        tol = 1e-12 + 10 * eps * (abs(b) + a * np.abs(levels).max()) / (a * np.diff(levels).min())
        assert abs(base.mean - moved.mean) < tol
        assert 0.0 <= base.mean <= 1.0
