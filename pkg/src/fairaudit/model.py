"""Baseline logistic-regression learner: the audit subject.

Deliberately dependency-free and deterministic: full-batch gradient descent
with backtracking on the L2-penalized mean log loss, zero initialization, and
an explicit feature encoding (standardized numerics with mean imputation,
one-hot categoricals against a lexicographic reference, and an optional
protected-group indicator so discriminating models can be constructed on
purpose for flip-test demonstrations).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import DECISION, OUTCOME, Dataset, split
from .errors import DataError
from .rng import CounterRng, derive_seed


@dataclass(frozen=True)
class NumericSpec:
    name: str
    mean: float  # training mean, also the imputation value
    sd: float  # training standard deviation, > 0


@dataclass(frozen=True)
class CategoricalSpec:
    name: str
    modalities: tuple[str, ...]  # sorted; modalities[0] is the reference


@dataclass(frozen=True)
class SensitiveSpec:
    name: str
    protected: str  # encoded as indicator(value == protected)


@dataclass(frozen=True)
class FeatureEncoding:
    """Deterministic mapping from dataset columns to a design matrix."""

    source_order: tuple[str, ...]
    numeric: dict[str, NumericSpec]
    categorical: dict[str, CategoricalSpec]
    sensitive: SensitiveSpec | None
    dropped: tuple[str, ...] = ()

    @property
    def feature_names(self) -> list[str]:
        names: list[str] = []
        for col in self.source_order:
            if col in self.numeric:
                names.append(col)
            elif col in self.categorical:
                spec = self.categorical[col]
                names.extend(f"{col}={m}" for m in spec.modalities[1:])
            elif self.sensitive is not None and col == self.sensitive.name:
                names.append(f"{col}={self.sensitive.protected}")
        return names

    @property
    def dimension(self) -> int:
        return len(self.feature_names)


def build_encoding(d: Dataset, include_sensitive: bool = False) -> FeatureEncoding:
    """Fit the encoding on a training dataset."""
    numeric: dict[str, NumericSpec] = {}
    categorical: dict[str, CategoricalSpec] = {}
    dropped: list[str] = []
    order: list[str] = []

    for name, role in d.schema.items():
        if role.kind == "numeric":
            values = d.values(name)
            ok = ~np.isnan(values)
            if not ok.any():
                warnings.warn(f"numeric column {name!r} is entirely missing; dropped")
                dropped.append(name)
                continue
            mean = float(np.mean(values[ok]))
            sd = float(np.std(values[ok]))
            if sd == 0.0:
                warnings.warn(f"numeric column {name!r} is constant; dropped")
                dropped.append(name)
                continue
            numeric[name] = NumericSpec(name, mean, sd)
            order.append(name)
        elif role.kind == "categorical":
            present = d.values(name)[~d.missing_mask(name)]
            modalities = tuple(sorted(np.unique(present).tolist()))
            categorical[name] = CategoricalSpec(name, modalities)
            order.append(name)

    sensitive = None
    if include_sensitive:
        s_name = d.sensitive_column
        sensitive = SensitiveSpec(s_name, str(d.schema[s_name].protected))
        order.append(s_name)

    return FeatureEncoding(
        source_order=tuple(order),
        numeric=numeric,
        categorical=categorical,
        sensitive=sensitive,
        dropped=tuple(dropped),
    )


def encode(enc: FeatureEncoding, d: Dataset) -> np.ndarray:
    """Design matrix for a dataset under a fitted encoding."""
    cols: list[np.ndarray] = []
    for name in enc.source_order:
        if name in enc.numeric:
            spec = enc.numeric[name]
            x = np.array(d.values(name), dtype=np.float64)
            x[np.isnan(x)] = spec.mean
            cols.append((x - spec.mean) / spec.sd)
        elif name in enc.categorical:
            spec = enc.categorical[name]
            values = d.values(name)
            known = np.isin(values, spec.modalities) | (values == "")
            if not known.all():
                warnings.warn(
                    f"column {name!r}: {int(np.count_nonzero(~known))} values outside "
                    "the training modalities encoded as all-zeros"
                )
            for m in spec.modalities[1:]:
                cols.append((values == m).astype(np.float64))
        elif enc.sensitive is not None and name == enc.sensitive.name:
            cols.append((d.values(name) == enc.sensitive.protected).astype(np.float64))
    if not cols:
        return np.zeros((d.n, 0))
    return np.column_stack(cols)


def encode_row(enc: FeatureEncoding, row: dict) -> np.ndarray:
    """Encode one raw row (mapping of column name to value)."""
    out: list[float] = []
    for name in enc.source_order:
        v = row.get(name)
        if name in enc.numeric:
            spec = enc.numeric[name]
            x = spec.mean if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)
            out.append((x - spec.mean) / spec.sd)
        elif name in enc.categorical:
            spec = enc.categorical[name]
            label = "" if v is None else str(v)
            if label and label not in spec.modalities:
                warnings.warn(f"column {name!r}: unknown modality {label!r} encoded as all-zeros")
            out.extend(1.0 if label == m else 0.0 for m in spec.modalities[1:])
        elif enc.sensitive is not None and name == enc.sensitive.name:
            out.append(1.0 if str(v) == enc.sensitive.protected else 0.0)
    return np.asarray(out)


# -- the model ---------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1.0
    max_iter: int = 5000
    l2: float = 1e-3
    tol: float = 1e-6  # gradient max-norm convergence threshold
    seed: int = 0  # only used when init_scale > 0
    init_scale: float = 0.0
    target: str = "auto"  # "auto" | "decision" | "outcome"


@dataclass(frozen=True)
class LogisticModel:
    encoding: FeatureEncoding
    weights: np.ndarray
    intercept: float
    config: TrainConfig
    target_column: str
    converged: bool

    def __post_init__(self):
        if len(self.weights) != self.encoding.dimension:
            raise DataError("weight vector length does not match encoding dimension")
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.intercept):
            raise DataError("model parameters must be finite")

    @property
    def uses_sensitive(self) -> bool:
        return self.encoding.sensitive is not None


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function with outputs kept inside (0, 1)."""
    z = np.clip(z, -700.0, 700.0)
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    # keep scores inside (0, 1) even under extreme linear terms
    return np.clip(out, 5e-324, 1.0 - 1e-16)


def loss_and_gradient(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Penalized mean log loss and its gradient; params = [intercept, weights...].

    The intercept is not penalized.
    """
    b, w = params[0], params[1:]
    z = b + X @ w
    # mean(log(1 + e^z) - y z), stable for large |z|
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(w @ w)
    resid = sigmoid(z) - y
    grad = np.empty_like(params)
    grad[0] = float(np.mean(resid))
    grad[1:] = X.T @ resid / len(y) + l2 * w
    return loss, grad


def _resolve_target(d: Dataset, config: TrainConfig) -> tuple[str, np.ndarray]:
    choice = config.target
    if choice == "auto":
        choice = DECISION if d.decision_column is not None else OUTCOME
    if choice == DECISION:
        name = d.decision_column
        if name is None:
            raise DataError("dataset has no decision column to train on")
        return name, d.positive_decision_mask().astype(np.float64)
    if choice == OUTCOME:
        name = d.outcome_column
        if name is None:
            raise DataError("dataset has no outcome column to train on")
        return name, d.positive_outcome_mask().astype(np.float64)
    raise DataError(f"unknown training target {choice!r}")


def train_logistic(d: Dataset, include_sensitive: bool = False,
                   config: TrainConfig | None = None) -> LogisticModel:
    """Fit the baseline by full-batch gradient descent with backtracking."""
    config = config or TrainConfig()
    target_name, y = _resolve_target(d, config)
    enc = build_encoding(d, include_sensitive=include_sensitive)
    if enc.dimension == 0:
        raise DataError("degenerate encoding: no usable feature columns")
    if d.n < enc.dimension + 1:
        raise DataError(f"need at least {enc.dimension + 1} rows to fit {enc.dimension} features")
    X = encode(enc, d)

    rate = float(np.mean(y))
    if rate in (0.0, 1.0):
        # constant target: the optimum is the constant class
        clipped = min(max(rate, 1e-6), 1.0 - 1e-6)
        return LogisticModel(
            encoding=enc,
            weights=np.zeros(enc.dimension),
            intercept=math.log(clipped / (1.0 - clipped)),
            config=config,
            target_column=target_name,
            converged=True,
        )

    params = np.zeros(enc.dimension + 1)
    if config.init_scale > 0.0:
        rng = CounterRng(config.seed)
        params = rng.normals(enc.dimension + 1) * config.init_scale

    lr = config.learning_rate
    loss, grad = loss_and_gradient(params, X, y, config.l2)
    for _ in range(config.max_iter):
        if float(np.max(np.abs(grad))) < config.tol:
            break
        stepped = False
        while lr >= 1e-14:
            candidate = params - lr * grad
            new_loss, new_grad = loss_and_gradient(candidate, X, y, config.l2)
            if new_loss <= loss:
                stepped = True
                break
            lr *= 0.5  # backtrack on any loss increase
        if not stepped:
            break
        params, loss, grad = candidate, new_loss, new_grad
    converged = float(np.max(np.abs(grad))) < config.tol

    weights = params[1:].copy()
    weights.flags.writeable = False
    return LogisticModel(
        encoding=enc,
        weights=weights,
        intercept=float(params[0]),
        config=config,
        target_column=target_name,
        converged=converged,
    )


def score_matrix(m: LogisticModel, X: np.ndarray) -> np.ndarray:
    return sigmoid(m.intercept + X @ m.weights)


def predict_scores(m: LogisticModel, d: Dataset) -> np.ndarray:
    """Probability scores for every row of a dataset."""
    return score_matrix(m, encode(m.encoding, d))


def predict_score(m: LogisticModel, row: dict) -> float:
    """Probability score for one raw row; missing numerics impute to training means."""
    x = encode_row(m.encoding, row)
    return float(score_matrix(m, x[None, :])[0])


def decide(score, threshold: float = 0.5):
    """Binary decision: positive iff score >= threshold (ties positive)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    return np.asarray(score) >= threshold


@dataclass(frozen=True)
class ErrorEstimate:
    rate: float
    sd: float | None
    scheme: str  # "holdout" | "monte-carlo-cv"
    replicates: int
    seed: int | None = None


def test_error(m: LogisticModel, d: Dataset, threshold: float = 0.5) -> ErrorEstimate:
    """Misclassification rate of thresholded scores against the model's target."""
    role = d.schema.get(m.target_column)
    if role is None or role.kind not in (DECISION, OUTCOME):
        raise DataError(f"dataset lacks the model's target column {m.target_column!r}")
    y = d.values(m.target_column) == role.positive
    decisions = decide(predict_scores(m, d), threshold)
    rate = float(np.mean(decisions != y))
    return ErrorEstimate(rate=rate, sd=None, scheme="holdout", replicates=1)


def cross_validate(d: Dataset, replicates: int, test_fraction: float, seed: int,
                   config: TrainConfig | None = None,
                   include_sensitive: bool = False,
                   threshold: float = 0.5) -> ErrorEstimate:
    """Monte-Carlo cross-validation: repeated stratified splits, mean test error."""
    if replicates < 2:
        raise DataError(f"cross-validation requires at least 2 replicates, got {replicates}")
    config = config or TrainConfig()
    rates = []
    for i in range(replicates):
        train_d, test_d = split(d, test_fraction, derive_seed(seed, i))
        m = train_logistic(train_d, include_sensitive=include_sensitive, config=config)
        rates.append(test_error(m, test_d, threshold).rate)
    rates_arr = np.asarray(rates)
    return ErrorEstimate(
        rate=float(np.mean(rates_arr)),
        sd=float(np.std(rates_arr, ddof=1)),
        scheme="monte-carlo-cv",
        replicates=replicates,
        seed=seed,
    )


# -- serialization -----------------------------------------------------------------


def model_to_dict(m: LogisticModel) -> dict:
    return {
        "format": "fairaudit-model/1",
        "intercept": m.intercept,
        "weights": [float(w) for w in m.weights],
        "converged": m.converged,
        "target_column": m.target_column,
        "config": asdict(m.config),
        "encoding": {
            "source_order": list(m.encoding.source_order),
            "numeric": {k: asdict(v) for k, v in m.encoding.numeric.items()},
            "categorical": {
                k: {"name": v.name, "modalities": list(v.modalities)}
                for k, v in m.encoding.categorical.items()
            },
            "sensitive": asdict(m.encoding.sensitive) if m.encoding.sensitive else None,
            "dropped": list(m.encoding.dropped),
        },
    }


def model_from_dict(obj: dict) -> LogisticModel:
    if obj.get("format") != "fairaudit-model/1":
        raise DataError(f"unsupported model format {obj.get('format')!r}")
    enc_obj = obj["encoding"]
    enc = FeatureEncoding(
        source_order=tuple(enc_obj["source_order"]),
        numeric={k: NumericSpec(**v) for k, v in enc_obj["numeric"].items()},
        categorical={
            k: CategoricalSpec(v["name"], tuple(v["modalities"]))
            for k, v in enc_obj["categorical"].items()
        },
        sensitive=SensitiveSpec(**enc_obj["sensitive"]) if enc_obj["sensitive"] else None,
        dropped=tuple(enc_obj.get("dropped", ())),
    )
    weights = np.asarray(obj["weights"], dtype=np.float64)
    weights.flags.writeable = False
    return LogisticModel(
        encoding=enc,
        weights=weights,
        intercept=float(obj["intercept"]),
        config=TrainConfig(**obj["config"]),
        target_column=str(obj["target_column"]),
        converged=bool(obj["converged"]),
    )


def save_model(m: LogisticModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m), indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LogisticModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such model file: {path}")
    return model_from_dict(json.loads(path.read_text(encoding="utf-8")))
