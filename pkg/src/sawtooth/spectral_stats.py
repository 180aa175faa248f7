"""Level-spacing statistics of a symmetry-resolved spectrum.

Spacing distributions, the alpha indicator and the Brody fit use unfolded
spectra; the gap ratio <r> works directly on raw eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .errors import FitFailure, InvalidArgument, UndefinedResult

MIN_LEVELS = 50
MIN_SPACINGS_FIT = 100
BRODY_RANGE = (0.0, 1.2)


def wigner_dyson(s):
    """GOE Wigner surmise (pi s / 2) exp(-pi s^2 / 4)."""
    s = np.asarray(s, dtype=float)
    return 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s * s)


def poisson(s):
    return np.exp(-np.asarray(s, dtype=float))


def brody_b(beta: float) -> float:
    # b = Gamma((beta+2)/(beta+1))^(beta+1)
    return float(np.exp((beta + 1.0) * gammaln((beta + 2.0) / (beta + 1.0))))


def brody(s, beta: float):
    s = np.asarray(s, dtype=float)
    b = brody_b(beta)
    return (beta + 1.0) * b * s**beta * np.exp(-b * s ** (beta + 1.0))


@dataclass(frozen=True)
class UnfoldedSpectrum:
    spacings: np.ndarray = field(repr=False)
    n_dropped: int
    method: str


@dataclass(frozen=True)
class SpacingHistogram:
    bin_edges: np.ndarray
    densities: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])


@dataclass(frozen=True)
class RatioStatistic:
    mean: float
    n_ratios: int
    n_degenerate: int


def _local_mean_spacings(levels: np.ndarray, window: int) -> np.ndarray:
    raw = np.diff(levels)
    kernel = np.ones(window) / window
    padded = np.pad(raw, (window // 2, window - 1 - window // 2), mode="edge")
    local = np.convolve(padded, kernel, mode="valid")
    return raw / local


def unfold(
    energies, poly_degree: int = 10, trim_fraction: float = 0.025, window: int = 20
) -> UnfoldedSpectrum:
    """Map levels through a polynomial fit of the staircase N(E).

    The fit covers every level; spacings are read off the interior after
    dropping ``trim_fraction`` of the levels at each band edge, then
    rescaled to unit mean.  If the fitted staircase is not monotone on the
    interior, fall back to dividing raw spacings by a running local mean.
    """
    levels = np.sort(np.asarray(energies, dtype=float))
    n = len(levels)
    cut = int(round(trim_fraction * n))
    interior = levels[cut : n - cut]
    if len(interior) < MIN_LEVELS:
        raise InvalidArgument(
            f"need at least {MIN_LEVELS} levels after trimming, have {len(interior)}"
        )
    if levels[-1] == levels[0]:
        raise InvalidArgument("spectrum has zero width")
    staircase = Polynomial.fit(levels, np.arange(n, dtype=float), poly_degree)
    mapped = staircase(interior)
    spacings = np.diff(mapped)
    method = f"polynomial(degree={poly_degree})"
    if np.any(spacings < 0):
        spacings = _local_mean_spacings(interior, window)
        method = f"local-mean(window={window})"
    spacings = np.where(np.diff(interior) == 0.0, 0.0, spacings)
    spacings = spacings / spacings.mean()
    return UnfoldedSpectrum(spacings, 2 * cut, method)


def histogram(spacings, bin_width: float = 0.1, s_max: float = 5.0) -> SpacingHistogram:
    """Density histogram on [0, s_max], normalized over the in-range samples."""
    n_bins = int(round(s_max / bin_width))
    edges = np.linspace(0.0, n_bins * bin_width, n_bins + 1)
    counts, _ = np.histogram(np.asarray(spacings, dtype=float), bins=edges)
    total = counts.sum()
    if total == 0:
        raise InvalidArgument("no spacings fall inside the histogram range")
    return SpacingHistogram(edges, counts / (total * bin_width))


def alpha_indicator(hist: SpacingHistogram) -> float:
    """sum_i |P(s_i) - P_WD(s_i)| / sum_i P_WD(s_i) over bin centres."""
    wd = wigner_dyson(hist.centers)
    return float(np.sum(np.abs(hist.densities - wd)) / np.sum(wd))


def peak_position(hist: SpacingHistogram) -> float:
    # argmax returns the first maximum, i.e. the lower s on ties
    return float(hist.centers[int(np.argmax(hist.densities))])


def brody_log_likelihood(beta: float, spacings: np.ndarray) -> float:
    b = brody_b(beta)
    return float(
        len(spacings) * (np.log1p(beta) + np.log(b))
        + beta * np.sum(np.log(spacings))
        - b * np.sum(spacings ** (beta + 1.0))
    )


def brody_fit(spacings, xatol: float = 1e-5) -> float:
    """Maximum-likelihood Brody parameter on [0, 1.2].

    Spacings are rescaled to unit mean first; exact zeros (degenerate
    levels) carry no likelihood for beta > 0 and are left out.
    """
    s = np.asarray(spacings, dtype=float)
    s = s[s > 0]
    if len(s) < MIN_SPACINGS_FIT:
        raise InvalidArgument(f"need at least {MIN_SPACINGS_FIT} nonzero spacings, have {len(s)}")
    if np.ptp(s) <= 1e-12 * s.mean():
        raise FitFailure("all spacings are equal; Brody fit is undefined")
    s = s / s.mean()
    res = minimize_scalar(
        lambda beta: -brody_log_likelihood(beta, s),
        bounds=BRODY_RANGE,
        method="bounded",
        options={"xatol": xatol},
    )
    if not res.success:
        raise FitFailure(f"Brody likelihood maximization failed: {res.message}")
    return float(res.x)


def r_statistic(energies, rel_tol: float = 1e-12) -> RatioStatistic:
    """Mean ratio of consecutive raw gaps, min/max.

    Gaps below ``rel_tol`` times the spectral width count as degeneracies
    and are removed before forming ratios.
    """
    levels = np.sort(np.asarray(energies, dtype=float))
    if len(levels) < 3:
        raise InvalidArgument("need at least 3 levels")
    gaps = np.diff(levels)
    width = levels[-1] - levels[0]
    degenerate = gaps <= rel_tol * width
    gaps = gaps[~degenerate]
    if len(gaps) < 2:
        raise UndefinedResult("fewer than two nondegenerate gaps")
    r = np.minimum(gaps[:-1], gaps[1:]) / np.maximum(gaps[:-1], gaps[1:])
    return RatioStatistic(float(np.mean(r)), len(r), int(degenerate.sum()))


def sample_poisson_spacings(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.exponential(1.0, n)


def sample_wigner_dyson_spacings(n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw from the Wigner surmise, CDF = 1 - exp(-pi s^2 / 4)."""
    u = rng.random(n)
    return np.sqrt(-4.0 * np.log1p(-u) / np.pi)
