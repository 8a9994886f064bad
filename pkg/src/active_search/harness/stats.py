"""Paired t-test with the Student-t distribution evaluated through the
regularized incomplete beta function."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special, stats


def t_cdf(t: float, df: float) -> float:
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * special.betainc(df / 2.0, 0.5, df / (df + t * t))
    return float(1.0 - tail if t >= 0 else tail)


def t_quantile(q: float, df: float) -> float:
    """Inverse of :func:`t_cdf` for q in (0, 1)."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if q == 0.5:
        return 0.0
    tail = min(q, 1 - q)
    x = special.betaincinv(df / 2.0, 0.5, 2 * tail)
    t = math.sqrt(df * (1 - x) / x)
    return t if q > 0.5 else -t


@dataclass
class TTestResult:
    mean_difference: float
    t_statistic: float
    df: int
    p_two_sided: float
    p_greater: float  # H1: mean(a - b) > 0
    p_less: float
    ci95: tuple[float, float]
    pair_count: int
    degenerate: bool = False


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least two pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        # all differences identical: the statistic is 0 or infinite
        if mean == 0.0:
            return TTestResult(0.0, 0.0, df, 1.0, 0.5, 0.5, (0.0, 0.0), n, True)
        t = math.copysign(math.inf, mean)
        return TTestResult(mean, t, df, 0.0, float(mean < 0), float(mean > 0), (mean, mean), n, True)
    se = sd / math.sqrt(n)
    t = mean / se
    p_two = float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    half = t_quantile(0.975, df) * se
        # each tail straight from the incomplete beta, so tiny p-values survive
    return TTestResult(mean, t, df, min(1.0, p_two), t_cdf(-t, df), t_cdf(t, df), (mean - half, mean + half), n)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    return float(stats.spearmanr(x, y).statistic)
