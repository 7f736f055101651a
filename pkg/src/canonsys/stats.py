"""Distributional test statistics for the acceptance experiments: one-sample
Kolmogorov--Smirnov, Kuiper circular uniformity, and least-squares slopes.

Asymptotic p-values throughout; the suites that consume them use level 0.01
with sample sizes of 200 and up, where the asymptotics are safe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sp_stats

from .errors import DataError

__all__ = ["TestReport", "ks_test", "circular_uniformity", "slope_fit"]


@dataclass(frozen=True)
class TestReport:
    statistic: float
    p_value: float
    n: int

    def to_json(self) -> str:
        return json.dumps({"stat": self.statistic, "p": self.p_value, "n": self.n})


def _check_samples(samples, min_n: int = 8) -> np.ndarray:
    xs = np.asarray(samples, dtype=float)
    if xs.ndim != 1 or len(xs) < min_n:
        raise DataError(f"need a flat sample of at least {min_n} points")
    if np.any(~np.isfinite(xs)):
        raise DataError("samples contain NaN or infinity")
    return xs


def ks_test(samples, cdf) -> TestReport:
    """One-sample Kolmogorov--Smirnov test against a parametric CDF."""
    xs = _check_samples(samples)
    res = sp_stats.ks_1samp(xs, cdf, mode="asymp")
    return TestReport(statistic=float(res.statistic), p_value=float(res.pvalue), n=len(xs))


def circular_uniformity(angles) -> TestReport:
    """Kuiper test of angles mod 2 pi against the uniform circular law.

    The statistic V = D+ + D- is rotation invariant; the p-value uses
    Stephens' asymptotic series in lambda = V (sqrt n + 0.155 + 0.24/sqrt n).
    """
    xs = _check_samples(angles)
    u = np.sort(np.mod(xs, 2.0 * math.pi) / (2.0 * math.pi))
    n = len(u)
    k = np.arange(1, n + 1)
    d_plus = np.max(k / n - u)
    d_minus = np.max(u - (k - 1) / n)
    v = d_plus + d_minus
    lam = v * (math.sqrt(n) + 0.155 + 0.24 / math.sqrt(n))
    if lam < 0.4:
        p = 1.0
    else:
        j = np.arange(1, 121)
        terms = (4.0 * j ** 2 * lam ** 2 - 1.0) * np.exp(-2.0 * j ** 2 * lam ** 2)
        p = float(min(1.0, max(0.0, 2.0 * np.sum(terms))))
    return TestReport(statistic=float(v), p_value=p, n=n)


def slope_fit(x, y):
    """Ordinary least squares line fit; returns (slope, intercept, stderr)."""
    xs = _check_samples(x, min_n=3)
    ys = _check_samples(y, min_n=3)
    if len(xs) != len(ys):
        raise DataError("x and y must have equal length")
    if np.ptp(xs) == 0:
        raise DataError("x values are all equal")
    res = sp_stats.linregress(xs, ys)
    return float(res.slope), float(res.intercept), float(res.stderr)
