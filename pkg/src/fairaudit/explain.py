"""Explanation aids: global permutation importance and a local linear surrogate.

Permutation importance is the mean decrease in decision accuracy when one
column is randomly permuted. The surrogate approximates the model's
probability score around one instance by weighted least squares on Gaussian
perturbations of the numeric features; the approximation is local by
construction and meaningless globally, which is the point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError
from .model import LogisticModel, decide, encode, predict_scores, score_matrix
from .rng import CounterRng, derive_seed


@dataclass(frozen=True)
class PermutationImportance:
    importances: dict[str, float]  # baseline accuracy minus mean permuted accuracy
    baseline_accuracy: float
    repeats: int
    seed: int


@dataclass(frozen=True)
class LocalSurrogate:
    row: int
    intercept: float
    coefficients: dict[str, float]  # per numeric feature, in raw feature units
    kernel_width: float
    n_samples: int
    seed: int
    r_squared: float  # weighted; 0 for zero-variance targets


def _target_mask(m: LogisticModel, d: Dataset) -> np.ndarray:
    role = d.schema.get(m.target_column)
    if role is None or role.kind not in ("decision", "outcome"):
        raise DataError(f"dataset lacks the model's target column {m.target_column!r}")
    return d.values(m.target_column) == role.positive


def permutation_importance(m: LogisticModel, d: Dataset, threshold: float = 0.5,
                           repeats: int = 10, seed: int = 0) -> PermutationImportance:
    """Mean decrease in accuracy over ``repeats`` random permutations per column.

    Every feature column plus the sensitive column is probed, whether or not
    the model consumes it; a column the model ignores scores exactly zero.
    """
    if repeats < 1:
        raise DataError(f"repeats must be >= 1, got {repeats}")
    y = _target_mask(m, d)
    baseline = float(np.mean(decide(predict_scores(m, d), threshold) == y))

    columns = d.numeric_features + d.categorical_features + [d.sensitive_column]
    importances: dict[str, float] = {}
    for fi, name in enumerate(columns):
        values = d.values(name)
        accs = []
        for r in range(repeats):
            rng = CounterRng(derive_seed(derive_seed(seed, fi), r))
            permuted = d.with_values(name, values[rng.permutation(d.n)])
            accs.append(float(np.mean(decide(predict_scores(m, permuted), threshold) == y)))
        importances[name] = baseline - float(np.mean(accs))
    return PermutationImportance(
        importances=importances,
        baseline_accuracy=baseline,
        repeats=repeats,
        seed=seed,
    )


def local_surrogate(m: LogisticModel, row: int, d: Dataset, n_samples: int = 1000,
                    kernel_width: float | None = None, seed: int = 0) -> LocalSurrogate:
    """Weighted linear fit of the model score around one row.

    Numeric features are perturbed with independent Gaussians whose scale is
    the training standard deviation; categorical values are held fixed. Sample
    weights decay as exp(-dist^2 / width^2) in standardized Euclidean
    distance from the instance. Coefficients are per raw feature unit.
    """
    if not 0 <= row < d.n:
        raise DataError(f"row index {row} out of range for n={d.n}")
    numeric = [name for name in m.encoding.source_order if name in m.encoding.numeric]
    if not numeric:
        raise DataError("model consumes no numeric features; nothing to perturb")
    if n_samples < 10 * len(numeric):
        raise DataError(f"need n_samples >= {10 * len(numeric)}, got {n_samples}")
    if kernel_width is None:
        kernel_width = 0.75 * np.sqrt(len(numeric))
    if kernel_width <= 0:
        raise DataError(f"kernel width must be positive, got {kernel_width}")

    # base encoded row (imputation and dummies included), and where the
    # numeric features live inside it
    base = encode(m.encoding, d.take([row]))[0]
    feature_names = m.encoding.feature_names
    positions = [feature_names.index(name) for name in numeric]
    means = np.array([m.encoding.numeric[n].mean for n in numeric])
    sds = np.array([m.encoding.numeric[n].sd for n in numeric])

    rng = CounterRng(derive_seed(seed, row))
    offsets = rng.normals(n_samples * len(numeric)).reshape(n_samples, len(numeric))

    X_enc = np.tile(base, (n_samples, 1))
    z = base[positions] + offsets  # standardized perturbed numerics
    X_enc[:, positions] = z
    scores = score_matrix(m, X_enc)

    dist_sq = np.sum(offsets**2, axis=1)
    w = np.exp(-dist_sq / kernel_width**2)

    raw = z * sds + means
    A = np.column_stack([np.ones(n_samples), raw])
    Aw = A * w[:, None]
    lhs = Aw.T @ A
    rhs = Aw.T @ scores
    try:
        beta = np.linalg.solve(lhs, rhs)
        if not np.all(np.isfinite(beta)):
            raise np.linalg.LinAlgError("non-finite solution")
    except np.linalg.LinAlgError:
        warnings.warn("singular normal equations; applying ridge 1e-8")
        beta = np.linalg.solve(lhs + 1e-8 * np.eye(len(lhs)), rhs)

    fitted = A @ beta
    w_mean = float(np.sum(w * scores) / np.sum(w))
    ss_tot = float(np.sum(w * (scores - w_mean) ** 2))
    ss_res = float(np.sum(w * (scores - fitted) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0

    return LocalSurrogate(
        row=row,
        intercept=float(beta[0]),
        coefficients={name: float(b) for name, b in zip(numeric, beta[1:])},
        kernel_width=float(kernel_width),
        n_samples=n_samples,
        seed=seed,
        r_squared=r2,
    )
