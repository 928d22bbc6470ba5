import math

import mpmath
import pytest

from fairaudit import (
    ContingencyTable,
    DataError,
    GroupConfusion,
    bootstrap_ci,
    contingency,
    di_ci_delta,
    disparate_impact_statistic,
    eo_ci_delta,
    equal_opportunity_statistic,
    normal_quantile,
)

from conftest import binary_dataset, confusion_dataset


# -- normal quantile ---------------------------------------------------------------


def phi_inv_oracle(p: float) -> float:
    return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))


def test_normal_quantile_against_mpmath():
    grid = [1e-9, 1e-6, 0.001, 0.01, 0.02425, 0.1, 0.25, 0.5,
            0.75, 0.9, 0.95, 0.975, 0.99, 0.999, 1 - 1e-6, 1 - 1e-9]
    for p in grid:
        assert normal_quantile(p) == pytest.approx(phi_inv_oracle(p), abs=1e-8)


def test_normal_quantile_symmetry_and_known_values():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-8)
    assert normal_quantile(0.025) == pytest.approx(-normal_quantile(0.975), abs=1e-12)
    with pytest.raises(ValueError):
        normal_quantile(0.0)
    with pytest.raises(ValueError):
        normal_quantile(1.0)


# -- delta intervals -----------------------------------------------------------------


def test_di_delta_worked_example():
    iv = di_ci_delta(ContingencyTable(40, 60, 60, 40), 0.95)
    # hand computation: se = sqrt(0.6/40 + 0.4/60), interval exp(log(2/3) +- z se)
    assert iv.lo == pytest.approx(0.500, abs=0.005)
    assert iv.hi == pytest.approx(0.890, abs=0.005)
    assert iv.method == "delta"


def test_di_delta_symmetric_about_one_on_log_scale():
    iv = di_ci_delta(ContingencyTable(30, 70, 30, 70), 0.95)
    assert iv.lo * iv.hi == pytest.approx(1.0, abs=1e-12)


def test_di_delta_level_monotonicity():
    narrow = di_ci_delta(ContingencyTable(40, 60, 60, 40), 0.95)
    wide = di_ci_delta(ContingencyTable(40, 60, 60, 40), 0.99)
    assert wide.lo < narrow.lo and narrow.hi < wide.hi


def test_di_delta_width_shrinks_with_sample_size():
    base = di_ci_delta(ContingencyTable(40, 60, 60, 40), 0.95)
    scaled = di_ci_delta(ContingencyTable(160, 240, 240, 160), 0.95)
    assert scaled.hi - scaled.lo < base.hi - base.lo
    ratio = (scaled.hi - scaled.lo) / (base.hi - base.lo)
    assert ratio == pytest.approx(0.5, abs=0.15)  # expected halving, +-30%


def test_di_delta_zero_cell_uses_correction():
    iv = di_ci_delta(ContingencyTable(0, 50, 25, 25), 0.95)
    assert 0.0 < iv.lo < iv.hi
    with pytest.raises(DataError):
        di_ci_delta(ContingencyTable(1, 0, 1, 0), 0.95)  # n1, n2 < 2


def test_eo_delta_equal_tprs_contains_one():
    d = confusion_dataset((10, 3, 7, 10), (10, 4, 6, 10))
    iv = eo_ci_delta(group_confusion_pair(d), 0.95)
    assert iv.lo < 1.0 < iv.hi


def group_confusion_pair(d):
    from fairaudit import group_confusion

    return group_confusion(d)


def test_eo_delta_worked_ratio():
    # TP_P = 30 of 60 positives, TP_N = 48 of 60 positives -> ratio 0.625
    p = GroupConfusion(tp=30, fp=10, tn=10, fn=30)
    q = GroupConfusion(tp=48, fp=10, tn=10, fn=12)
    iv = eo_ci_delta((p, q), 0.95)
    se = math.sqrt(0.5 / (60 * 0.5) + 0.2 / (60 * 0.8))
    z = normal_quantile(0.975)
    assert iv.lo == pytest.approx(0.625 * math.exp(-z * se), rel=1e-12)
    assert iv.hi == pytest.approx(0.625 * math.exp(z * se), rel=1e-12)


def test_eo_delta_precondition_errors():
    with pytest.raises(DataError):
        eo_ci_delta((GroupConfusion(1, 1, 1, 0), GroupConfusion(5, 1, 1, 5)), 0.95)
    with pytest.raises(DataError):
        eo_ci_delta((GroupConfusion(0, 1, 1, 5), GroupConfusion(5, 1, 1, 5)), 0.95)


# -- bootstrap ------------------------------------------------------------------------


def test_bootstrap_constant_statistic_zero_width():
    d = binary_dataset(10, 10, 10, 10)
    iv = bootstrap_ci(lambda _: 0.42, d, B=200, seed=0, name="constant")
    assert iv.lo == iv.hi == 0.42
    assert iv.statistic == "constant"


def test_bootstrap_deterministic_given_seed():
    d = binary_dataset(40, 60, 60, 40)
    a = bootstrap_ci(disparate_impact_statistic, d, B=300, seed=1)
    b = bootstrap_ci(disparate_impact_statistic, d, B=300, seed=1)
    assert (a.lo, a.hi) == (b.lo, b.hi)
    c = bootstrap_ci(disparate_impact_statistic, d, B=300, seed=2)
    assert (a.lo, a.hi) != (c.lo, c.hi)


def test_bootstrap_agrees_with_delta_moderate_n():
    d = binary_dataset(200, 300, 300, 200)
    boot = bootstrap_ci(disparate_impact_statistic, d, B=2000, seed=1)
    delta = di_ci_delta(contingency(d), 0.95)
    assert boot.lo == pytest.approx(delta.lo, abs=0.05)
    assert boot.hi == pytest.approx(delta.hi, abs=0.05)


def test_eo_bootstrap_agrees_with_delta():
    # 30/60 and 48/60 outcome-positive groups: ratio 0.625
    d = confusion_dataset((30, 10, 10, 30), (48, 10, 10, 12))
    assert equal_opportunity_statistic(d) == pytest.approx(0.625)
    boot = bootstrap_ci(equal_opportunity_statistic, d, B=2000, seed=3)
    delta = eo_ci_delta(group_confusion_pair(d), 0.95)
    assert boot.lo == pytest.approx(delta.lo, abs=0.05)
    assert boot.hi == pytest.approx(delta.hi, abs=0.05)


def test_bootstrap_requires_b_at_least_100():
    with pytest.raises(DataError):
        bootstrap_ci(disparate_impact_statistic, binary_dataset(5, 5, 5, 5), B=50, seed=0)


def test_bootstrap_reports_failure_fraction():
    d = binary_dataset(10, 10, 10, 10)

    def broken(_):
        raise DataError("nope")

    with pytest.raises(DataError, match="undefined on"):
        bootstrap_ci(broken, d, B=100, seed=0, name="broken")
