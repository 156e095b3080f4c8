"""Decision statistics: Monte Carlo estimates, z-tests, KS and chi-square."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = [
    "Estimate",
    "estimate",
    "z_test",
    "two_sample_z",
    "ks_test",
    "chi_square_test",
    "equal_probability_bins",
    "RichardsonResult",
    "richardson_bias",
]

MIN_KS_SAMPLE = 100


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error.

    ``excluded_fraction`` is the share of simulated paths that were dropped
    (runaway hitting times) before averaging.
    """

    mean: float
    std_error: float
    n: int
    excluded_fraction: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"an estimate needs n >= 2, got {self.n}")
        if not 0.0 <= self.excluded_fraction <= 1.0:
            raise ValueError("excluded_fraction must lie in [0, 1]")


def estimate(values, excluded_fraction: float = 0.0) -> Estimate:
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError(f"an estimate needs at least 2 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return Estimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), int(x.size),
                    float(excluded_fraction))


def z_test(est: Estimate, expected: float) -> float:
    """Standardized distance of ``est`` from ``expected``."""
    diff = est.mean - expected
    if est.std_error == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / est.std_error


def two_sample_z(a: Estimate, b: Estimate) -> float:
    se = math.hypot(a.std_error, b.std_error)
    diff = a.mean - b.mean
    if se == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / se


def ks_test(sample, other) -> tuple[float, float]:
    """Kolmogorov-Smirnov statistic and asymptotic p-value.

    ``other`` is either a CDF callable (one-sample test) or a second sample.
    """
    x = np.asarray(sample, dtype=float)
    if x.size < MIN_KS_SAMPLE:
        raise ValueError(f"KS needs at least {MIN_KS_SAMPLE} values, got {x.size}")
    if callable(other):
        res = stats.ks_1samp(x, other, method="asymp")
    else:
        y = np.asarray(other, dtype=float)
        if y.size < MIN_KS_SAMPLE:
            raise ValueError(f"KS needs at least {MIN_KS_SAMPLE} values, got {y.size}")
        res = stats.ks_2samp(x, y, method="asymp")
    return float(res.statistic), float(res.pvalue)


def equal_probability_bins(quantile, n_bins: int) -> np.ndarray:
    """Interior bin edges with equal mass under ``quantile`` (inverse CDF)."""
    return np.array([quantile(k / n_bins) for k in range(1, n_bins)])


def chi_square_test(sample, edges, probabilities) -> tuple[float, float]:
    """Pearson chi-square of binned ``sample`` against cell ``probabilities``.

    ``edges`` are the interior edges (cells are ``(-inf, e0], (e0, e1], ...``).
    """
    x = np.asarray(sample, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    if p.size != len(edges) + 1:
        raise ValueError("need one probability per cell")
    observed = np.bincount(np.searchsorted(edges, x, side="left"), minlength=p.size)
    expected = p / p.sum() * x.size
    res = stats.chisquare(observed, expected)
    return float(res.statistic), float(res.pvalue)


@dataclass(frozen=True)
class RichardsonResult:
    """Empirical bias order from a step ladder.

    ``order`` is the log-log slope of ``|estimate - oracle|`` against the
    step, or ``nan`` when every error sits inside the noise band.
    """

    steps: tuple
    estimates: tuple
    errors: tuple
    order: float
    verdict: str


def richardson_bias(run, steps, oracle: float, *, noise_z: float = 2.0) -> RichardsonResult:
    """Regress log |bias| on log step for ``run(step) -> Estimate``.

    ``steps`` must hold at least three values in geometric progression.  The
    result is ``inconclusive`` when no error exceeds ``noise_z`` standard
    errors, ``pass`` when the fitted order is positive.
    """
    steps = tuple(float(s) for s in steps)
    if len(steps) < 3:
        raise ValueError("richardson_bias needs at least three step sizes")
    ratios = [steps[k + 1] / steps[k] for k in range(len(steps) - 1)]
    if any(not math.isclose(r, ratios[0], rel_tol=1e-9) for r in ratios) or ratios[0] == 1.0:
        raise ValueError("steps must form a geometric progression")
    ests = tuple(run(h) for h in steps)
    errors = tuple(abs(e.mean - oracle) for e in ests)
    if all(err <= noise_z * e.std_error for err, e in zip(errors, ests)):
        return RichardsonResult(steps, ests, errors, math.nan, "inconclusive")
    logs = np.log(np.maximum(errors, 1e-300))
    slope = float(np.polyfit(np.log(steps), logs, 1)[0])
    return RichardsonResult(steps, ests, errors, slope, "pass" if slope > 0 else "fail")
