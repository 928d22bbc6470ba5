import numpy as np
import pytest

from fairaudit import DataError, local_surrogate, permutation_importance, predict_score, train_logistic
from fairaudit.model import FeatureEncoding, LogisticModel, NumericSpec, TrainConfig
from fairaudit.rng import CounterRng

from conftest import feature_dataset


def two_feature_dataset(n=500, seed=1):
    rng = CounterRng(seed)
    x = rng.normals(n)
    z = rng.normals(n)
    y = np.where(x > 0, "1", "0")  # x separates perfectly, z is noise
    s = np.where(rng.uniforms(n) < 0.5, "a", "b")
    return feature_dataset(x, y, s, extra={"z": z})


def linear_hand_model(d, weights):
    enc = FeatureEncoding(
        source_order=("x", "z"),
        numeric={
            "x": NumericSpec("x", float(np.mean(d.values("x"))), float(np.std(d.values("x")))),
            "z": NumericSpec("z", float(np.mean(d.values("z"))), float(np.std(d.values("z")))),
        },
        categorical={},
        sensitive=None,
    )
    return LogisticModel(encoding=enc, weights=np.asarray(weights, dtype=float),
                         intercept=0.0, config=TrainConfig(), target_column="y",
                         converged=True)


# -- permutation importance ------------------------------------------------------------


def test_zero_weight_feature_importance_is_zero():
    d = two_feature_dataset()
    m = linear_hand_model(d, [2.0, 0.0])
    pi = permutation_importance(m, d, repeats=3, seed=0)
    assert pi.importances["z"] == 0.0
    assert abs(pi.importances["s"]) == 0.0  # not consumed at all


def test_separating_feature_importance_near_half():
    d = two_feature_dataset(n=2000, seed=7)
    m = train_logistic(d)
    pi = permutation_importance(m, d, repeats=10, seed=0)
    assert pi.baseline_accuracy > 0.97
    assert pi.importances["x"] == pytest.approx(pi.baseline_accuracy - 0.5, abs=0.05)
    assert abs(pi.importances["z"]) < 0.02


def test_dominant_feature_ranking_stable_across_repeat_counts():
    d = two_feature_dataset(n=600, seed=9)
    m = train_logistic(d)
    one = permutation_importance(m, d, repeats=1, seed=4)
    ten = permutation_importance(m, d, repeats=10, seed=4)
    for pi in (one, ten):
        assert max(pi.importances, key=pi.importances.get) == "x"


def test_permutation_importance_deterministic():
    d = two_feature_dataset(n=300, seed=2)
    m = train_logistic(d)
    a = permutation_importance(m, d, repeats=5, seed=11)
    b = permutation_importance(m, d, repeats=5, seed=11)
    assert a == b


def test_permutation_importance_validates_repeats():
    d = two_feature_dataset(n=100)
    m = train_logistic(d)
    with pytest.raises(DataError):
        permutation_importance(m, d, repeats=0)


# -- local surrogate ---------------------------------------------------------------------


def test_surrogate_slope_matches_analytic_derivative():
    d = two_feature_dataset(n=400, seed=3)
    m = linear_hand_model(d, [1.0, 0.4])
    # probe the row closest to the feature means, where the score is mid-range
    enc_x = (d.values("x") - m.encoding.numeric["x"].mean) / m.encoding.numeric["x"].sd
    enc_z = (d.values("z") - m.encoding.numeric["z"].mean) / m.encoding.numeric["z"].sd
    row = int(np.argmin(enc_x**2 + enc_z**2))
    ls = local_surrogate(m, row, d, n_samples=3000, seed=0)
    score = predict_score(m, {"x": float(d.values("x")[row]), "z": float(d.values("z")[row])})
    for name, w in (("x", 1.0), ("z", 0.4)):
        derivative = score * (1 - score) * w / m.encoding.numeric[name].sd
        assert ls.coefficients[name] == pytest.approx(derivative, rel=0.10)
    assert ls.r_squared > 0.9


def test_surrogate_constant_model():
    d = two_feature_dataset(n=200, seed=4)
    m = linear_hand_model(d, [0.0, 0.0])
    ls = local_surrogate(m, 0, d, n_samples=200, seed=0)
    assert abs(ls.coefficients["x"]) < 1e-6
    assert abs(ls.coefficients["z"]) < 1e-6
    assert ls.r_squared == 0.0


def test_surrogate_narrower_kernel_fits_nonlinear_score_better():
    d = two_feature_dataset(n=300, seed=6)
    m = linear_hand_model(d, [4.0, 0.0])  # steep: strongly nonlinear locally
    row = int(np.argmax(np.abs(d.values("x"))))  # saturated region
    wide, narrow = [], []
    for seed in range(10):
        wide.append(local_surrogate(m, row, d, n_samples=400, kernel_width=1.5, seed=seed).r_squared)
        narrow.append(local_surrogate(m, row, d, n_samples=400, kernel_width=0.75, seed=seed).r_squared)
    assert np.mean(narrow) >= np.mean(wide) - 1e-9


def test_surrogate_deterministic_and_validated():
    d = two_feature_dataset(n=120, seed=8)
    m = linear_hand_model(d, [1.0, -0.5])
    a = local_surrogate(m, 5, d, n_samples=200, seed=3)
    b = local_surrogate(m, 5, d, n_samples=200, seed=3)
    assert a == b
    with pytest.raises(DataError, match="n_samples"):
        local_surrogate(m, 5, d, n_samples=10, seed=3)
    with pytest.raises(DataError, match="kernel"):
        local_surrogate(m, 5, d, n_samples=200, kernel_width=0.0, seed=3)
    with pytest.raises(DataError, match="row"):
        local_surrogate(m, d.n, d, n_samples=200, seed=3)


def test_surrogate_sign_matches_model_weight_sign():
    d = two_feature_dataset(n=400, seed=10)
    m = linear_hand_model(d, [0.9, -0.6])
    rng = CounterRng(14)
    rows = (rng.uniforms(20) * d.n).astype(int)
    for row in rows:
        ls = local_surrogate(m, int(row), d, n_samples=300, seed=1)
        assert ls.coefficients["x"] > 0
        assert ls.coefficients["z"] < 0
