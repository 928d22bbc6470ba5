"""Confidence intervals for disparity ratios.

Two routes are provided on purpose: a closed-form delta-method interval on the
log ratio scale, and a seeded stratified bootstrap that serves as a transparent
cross-check of the delta interval rather than as a production interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import Dataset
from .errors import DataError
from .metrics import ContingencyTable, GroupConfusion, base_rates, contingency, group_confusion
from .rng import CounterRng, derive_seed

# Acklam's rational approximation of the standard normal quantile.
# Absolute error below 1.2e-9 over (0, 1), well under the documented 1e-8.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF by rational approximation (error < 1e-8)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must be in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
               ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
                ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
           (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


@dataclass(frozen=True)
class IntervalEstimate:
    """Confidence interval for a named statistic."""

    statistic: str
    method: str  # "delta" | "bootstrap"
    level: float
    lo: float
    hi: float
    replicates: int | None = None  # bootstrap only
    seed: int | None = None  # bootstrap only

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must be in (0, 1), got {self.level}")
        if self.lo > self.hi:
            raise ValueError(f"{self.statistic}: lo {self.lo} > hi {self.hi}")


def _log_ratio_interval(statistic: str, p1: float, p2: float, n1: int, n2: int,
                        level: float) -> IntervalEstimate:
    if not (0.0 < p1 and 0.0 < p2):
        raise DataError(f"degenerate rates p1={p1}, p2={p2} after correction")
    se = math.sqrt((1.0 - p1) / (n1 * p1) + (1.0 - p2) / (n2 * p2))
    z = normal_quantile((1.0 + level) / 2.0)
    log_ratio = math.log(p1 / p2)
    return IntervalEstimate(
        statistic=statistic,
        method="delta",
        level=level,
        lo=math.exp(log_ratio - z * se),
        hi=math.exp(log_ratio + z * se),
    )


def di_ci_delta(t: ContingencyTable, level: float = 0.95) -> IntervalEstimate:
    """Delta-method interval for the disparate-impact ratio on the log scale."""
    if t.n1 < 2 or t.n2 < 2:
        raise DataError("interval requires at least 2 rows per group")
    r = base_rates(t)
    return _log_ratio_interval("disparate_impact", r.p1, r.p2, t.n1, t.n2, level)


def eo_ci_delta(pair: tuple[GroupConfusion, GroupConfusion], level: float = 0.95) -> IntervalEstimate:
    """Delta-method interval for the equal-opportunity (TPR) ratio.

    Same form as the disparate-impact interval, applied to the outcome-positive
    sub-population: rates become group TPRs and sizes the outcome-positive counts.
    """
    p, q = pair
    m1, m2 = p.tp + p.fn, q.tp + q.fn
    if m1 < 2 or m2 < 2:
        raise DataError("interval requires at least 2 outcome-positive rows per group")
    if p.tp < 1 or q.tp < 1:
        raise DataError("interval requires at least 1 true positive per group")
    return _log_ratio_interval("equal_opportunity_ratio", p.tp / m1, q.tp / m2, m1, m2, level)


# -- bootstrap --------------------------------------------------------------------


def disparate_impact_statistic(d: Dataset) -> float:
    """Point disparate impact of a dataset's decisions (zero cells corrected)."""
    r = base_rates(contingency(d))
    return r.p1 / r.p2


def equal_opportunity_statistic(d: Dataset) -> float:
    """Ratio of group true-positive rates of a dataset's decisions."""
    p, q = group_confusion(d)
    if p.tpr is None or q.tpr is None or q.tpr == 0:
        raise DataError("TPR undefined in a group")
    return p.tpr / q.tpr


def bootstrap_ci(
    statistic: Callable[[Dataset], float],
    d: Dataset,
    B: int,
    seed: int,
    level: float = 0.95,
    name: str | None = None,
) -> IntervalEstimate:
    """Percentile bootstrap interval, stratified by sensitive group.

    Each replicate resamples rows with replacement within each group, so the
    group sizes n1, n2 are held fixed. Replicate i draws from a sub-seed
    derived from (seed, i), making the result independent of execution order.
    Raises if the statistic is undefined on more than 10% of replicates.
    """
    if B < 100:
        raise DataError(f"bootstrap requires B >= 100, got {B}")
    protected = d.protected_mask()
    group_idx = [np.flatnonzero(protected), np.flatnonzero(~protected)]
    group_idx = [g for g in group_idx if len(g) > 0]

    values = []
    failures = 0
    for i in range(B):
        rng = CounterRng(derive_seed(seed, i))
        pieces = [g[rng.integers(len(g), len(g))] for g in group_idx]
        resample = d.take(np.concatenate(pieces))
        try:
            values.append(statistic(resample))
        except DataError:
            failures += 1
    if failures > 0.10 * B:
        raise DataError(
            f"statistic undefined on {failures}/{B} resamples "
            f"({failures / B:.1%} > 10%)"
        )
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(np.asarray(values), [alpha, 1.0 - alpha], method="linear")
    return IntervalEstimate(
        statistic=name or getattr(statistic, "__name__", "statistic"),
        method="bootstrap",
        level=level,
        lo=float(lo),
        hi=float(hi),
        replicates=B,
        seed=seed,
    )
