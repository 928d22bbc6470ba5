"""Group disparity measures over a 2x2 contingency table, per-group confusion
matrices and their gaps, and the Mann-Whitney AUC.

Orientation convention used throughout: ratios are protected / non-protected
and differences are protected - non-protected. Reports must state this.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError

RISK_DIFFERENCE = "risk_difference"
DISPARATE_IMPACT = "disparate_impact"
RELATIVE_CHANCE = "relative_chance"
ODDS_RATIO = "odds_ratio"


@dataclass(frozen=True)
class ContingencyTable:
    """Counts a..d of positive/negative decisions by protected/non-protected group."""

    a: int  # protected, positive decision
    b: int  # protected, negative decision
    c: int  # non-protected, positive decision
    d: int  # non-protected, negative decision

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise DataError("contingency counts must be non-negative")
        if self.n < 1:
            raise DataError("contingency table must count at least one row")

    @property
    def n1(self) -> int:
        return self.a + self.b

    @property
    def n2(self) -> int:
        return self.c + self.d

    @property
    def m1(self) -> int:
        return self.a + self.c

    @property
    def m2(self) -> int:
        return self.b + self.d

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d


@dataclass(frozen=True)
class GroupRates:
    """Positive-decision rates: p1 protected, p2 non-protected, p overall."""

    p1: float
    p2: float
    p: float
    corrected: bool = False


@dataclass(frozen=True)
class MetricEstimate:
    """A named statistic with an optional confidence interval.

    ``value`` is None when the statistic is undefined on the given data
    (zero denominator); undefined estimates carry no interval.
    """

    name: str
    value: float | None
    lo: float | None = None
    hi: float | None = None
    level: float | None = None
    corrected: bool = False

    def __post_init__(self):
        has_interval = self.lo is not None or self.hi is not None
        if has_interval:
            if self.lo is None or self.hi is None or self.level is None:
                raise ValueError("interval requires lo, hi and level")
            if not 0.0 < self.level < 1.0:
                raise ValueError(f"level must be in (0, 1), got {self.level}")
            if self.value is None or not self.lo <= self.value <= self.hi:
                raise ValueError(
                    f"{self.name}: estimate {self.value} outside interval "
                    f"({self.lo}, {self.hi})"
                )

    def with_interval(self, lo: float, hi: float, level: float) -> "MetricEstimate":
        return MetricEstimate(self.name, self.value, lo, hi, level, self.corrected)


def contingency(d: Dataset) -> ContingencyTable:
    """Count decisions by group. Both groups must be nonempty."""
    protected = d.protected_mask()
    positive = d.positive_decision_mask()
    n1 = int(np.count_nonzero(protected))
    n2 = d.n - n1
    if n1 == 0 or n2 == 0:
        raise DataError("contingency requires both sensitive groups to be nonempty")
    a = int(np.count_nonzero(protected & positive))
    c = int(np.count_nonzero(~protected & positive))
    return ContingencyTable(a=a, b=n1 - a, c=c, d=n2 - c)


def base_rates(t: ContingencyTable) -> GroupRates:
    """Group positive rates, with a +0.5/+1 zero-cell correction.

    When a == 0 or c == 0 both group rates become (x + 0.5) / (n_g + 1) and
    the ``corrected`` flag is set, keeping downstream ratios finite without
    silently altering clean data. The overall rate p is always exact.
    """
    if t.n1 < 1 or t.n2 < 1:
        raise DataError("both groups must be nonempty")
    if t.a == 0 or t.c == 0:
        p1 = (t.a + 0.5) / (t.n1 + 1)
        p2 = (t.c + 0.5) / (t.n2 + 1)
        corrected = True
    else:
        p1 = t.a / t.n1
        p2 = t.c / t.n2
        corrected = False
    return GroupRates(p1=p1, p2=p2, p=t.m1 / t.n, corrected=corrected)


def disparity_metrics(r: GroupRates) -> dict[str, MetricEstimate]:
    """The four classical disparity measures from the group rates.

    risk_difference   p1 - p2
    disparate_impact  p1 / p2
    relative_chance   (1 - p1) / (1 - p2)
    odds_ratio        disparate_impact / relative_chance
    """
    if not (0.0 < r.p1 < 1.0) or not (0.0 < r.p2 < 1.0):
        raise DataError(
            f"degenerate group rates p1={r.p1}, p2={r.p2}: "
            "ratios are undefined at 0 or 1"
        )
    di = r.p1 / r.p2
    cr = (1.0 - r.p1) / (1.0 - r.p2)
    values = {
        RISK_DIFFERENCE: r.p1 - r.p2,
        DISPARATE_IMPACT: di,
        RELATIVE_CHANCE: cr,
        ODDS_RATIO: di / cr,
    }
    return {
        name: MetricEstimate(name, value, corrected=r.corrected)
        for name, value in values.items()
    }


def eighty_percent_verdict(di: MetricEstimate, threshold: float = 0.8, use_interval: bool = False) -> str:
    """Four-fifths rule verdict: 'pass', 'fail', or (interval mode) 'inconclusive'.

    Point mode fails iff the estimate is strictly below the threshold, so a
    value exactly at the threshold passes. Interval mode fails when the whole
    interval is below the threshold and passes when it is entirely at or above.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if di.value is None:
        raise DataError("verdict requires a defined disparate-impact estimate")
    if use_interval:
        if di.lo is None or di.hi is None:
            raise ValueError("interval verdict requested but estimate has no interval")
        if di.hi < threshold:
            return "fail"
        if di.lo >= threshold:
            return "pass"
        return "inconclusive"
    return "fail" if di.value < threshold else "pass"


# -- confusion matrices ----------------------------------------------------------


def _rate(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


@dataclass(frozen=True)
class GroupConfusion:
    """Confusion counts of one sensitive group: decision vs outcome."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def tpr(self) -> float | None:
        return _rate(self.tp, self.tp + self.fn)

    @property
    def fpr(self) -> float | None:
        return _rate(self.fp, self.fp + self.tn)

    @property
    def fnr(self) -> float | None:
        return _rate(self.fn, self.tp + self.fn)

    @property
    def ppv(self) -> float | None:
        return _rate(self.tp, self.tp + self.fp)

    @property
    def accuracy(self) -> float | None:
        return _rate(self.tp + self.tn, self.total)

    @property
    def base_rate(self) -> float | None:
        """Outcome-positive fraction of the group."""
        return _rate(self.tp + self.fn, self.total)


def group_confusion(d: Dataset) -> tuple[GroupConfusion, GroupConfusion]:
    """(protected, non-protected) confusion matrices of decision against outcome."""
    protected = d.protected_mask()
    decision = d.positive_decision_mask()
    outcome = d.positive_outcome_mask()
    if not protected.any() or protected.all():
        raise DataError("group confusion requires both sensitive groups to be nonempty")

    def counts(mask: np.ndarray) -> GroupConfusion:
        dec, out = decision[mask], outcome[mask]
        return GroupConfusion(
            tp=int(np.count_nonzero(dec & out)),
            fp=int(np.count_nonzero(dec & ~out)),
            tn=int(np.count_nonzero(~dec & ~out)),
            fn=int(np.count_nonzero(~dec & out)),
        )

    return counts(protected), counts(~protected)


def confusion_gaps(pair: tuple[GroupConfusion, GroupConfusion]) -> dict[str, MetricEstimate]:
    """Cross-group gaps in confusion rates.

    Equal opportunity and conditional precision are reported as ratios
    (protected / non-protected, comparable to the 0.8 convention); error rates
    as differences (protected - non-protected). Both forms are included. An
    entry is undefined (value None) when a needed rate has a zero denominator.
    """
    p, q = pair

    def ratio(name: str, x: float | None, y: float | None) -> MetricEstimate:
        if x is None or y is None or y == 0:
            return MetricEstimate(name, None)
        return MetricEstimate(name, x / y)

    def diff(name: str, x: float | None, y: float | None) -> MetricEstimate:
        if x is None or y is None:
            return MetricEstimate(name, None)
        return MetricEstimate(name, x - y)

    return {
        "equal_opportunity_ratio": ratio("equal_opportunity_ratio", p.tpr, q.tpr),
        "precision_ratio": ratio("precision_ratio", p.ppv, q.ppv),
        "fpr_difference": diff("fpr_difference", p.fpr, q.fpr),
        "fnr_difference": diff("fnr_difference", p.fnr, q.fnr),
        "accuracy_difference": diff("accuracy_difference", p.accuracy, q.accuracy),
        "equal_opportunity_difference": diff("equal_opportunity_difference", p.tpr, q.tpr),
        "precision_difference": diff("precision_difference", p.ppv, q.ppv),
        "fpr_ratio": ratio("fpr_ratio", p.fpr, q.fpr),
        "fnr_ratio": ratio("fnr_ratio", p.fnr, q.fnr),
    }


def implied_false_positive_rate(base_rate: float, ppv: float, tpr: float) -> float:
    """FPR forced by (base rate, PPV, TPR) for any exact confusion matrix.

    Equal precision with unequal base rates therefore forces unequal false
    positive rates: this value is strictly increasing in the base rate.
    """
    if not 0.0 < base_rate < 1.0:
        raise DataError(f"base rate must be in (0, 1), got {base_rate}")
    if not 0.0 < ppv < 1.0:
        raise DataError(f"PPV must be in (0, 1), got {ppv}")
    return (base_rate / (1.0 - base_rate)) * ((1.0 - ppv) / ppv) * tpr


def impossibility_residual(g: GroupConfusion) -> float:
    """FPR minus the FPR implied by (base rate, PPV, TPR); zero up to rounding."""
    p, ppv, tpr, fpr = g.base_rate, g.ppv, g.tpr, g.fpr
    if p is None or ppv is None or tpr is None or fpr is None:
        raise DataError("impossibility residual requires all rates defined")
    return fpr - implied_false_positive_rate(p, ppv, tpr)


# -- AUC --------------------------------------------------------------------------


def auc(scores, outcomes) -> MetricEstimate:
    """Mann-Whitney AUC: P(score_pos > score_neg) with ties counted 1/2.

    Computed from average ranks, which matches the exhaustive pair count
    exactly (tie contributions are halves, exact in binary floating point).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(outcomes)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError("scores and outcomes must be 1-d sequences of equal length")
    if not np.all(np.isfinite(s)):
        raise DataError("scores must be finite")
    pos = np.asarray(y, dtype=bool)
    n_pos = int(np.count_nonzero(pos))
    n_neg = len(s) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC requires at least one positive and one negative outcome")

    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * ((i + 1) + (j + 1))  # average rank, 1-based
        i = j + 1
    rank_sum = float(np.sum(ranks[pos]))
    value = (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return MetricEstimate("auc", value)
