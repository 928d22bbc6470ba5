"""Typed tabular datasets with declared column roles.

Columns are stored column-major: numeric columns as float64 arrays (NaN for
missing cells), everything else as text label arrays ("" for missing). Binary
columns (sensitive, decision, outcome) keep their raw labels together with a
declared protected/positive modality, so the orientation of every downstream
ratio is an explicit declaration rather than an accident of encoding.

Datasets are immutable after construction; all operations here are pure
functions of their inputs (and a seed, where one is taken).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .rng import CounterRng

NUMERIC = "numeric"
CATEGORICAL = "categorical"
SENSITIVE = "sensitive"
DECISION = "decision"
OUTCOME = "outcome"
IGNORED = "ignored"

ROLE_KINDS = (NUMERIC, CATEGORICAL, SENSITIVE, DECISION, OUTCOME, IGNORED)
_BINARY_KINDS = (SENSITIVE, DECISION, OUTCOME)


@dataclass(frozen=True)
class ColumnRole:
    """Role of one column: its kind plus the declared modality, if binary."""

    kind: str
    protected: str | None = None  # sensitive columns
    positive: str | None = None  # decision/outcome columns

    def __post_init__(self):
        if self.kind not in ROLE_KINDS:
            raise SchemaError(f"unknown column role {self.kind!r}")
        if self.kind == SENSITIVE and self.protected is None:
            raise SchemaError("sensitive role requires a 'protected' modality")
        if self.kind in (DECISION, OUTCOME) and self.positive is None:
            raise SchemaError(f"{self.kind} role requires a 'positive' modality")


def parse_schema(spec: Mapping[str, object]) -> dict[str, ColumnRole]:
    """Parse a JSON-style schema: column name -> role descriptor.

    A descriptor is either a bare role string (``"numeric"``) or an object
    such as ``{"role": "sensitive", "protected": "female"}``.
    """
    schema: dict[str, ColumnRole] = {}
    for name, desc in spec.items():
        if isinstance(desc, str):
            schema[name] = ColumnRole(desc)
        elif isinstance(desc, Mapping):
            if "role" not in desc:
                raise SchemaError(f"column {name!r}: descriptor lacks 'role'")
            extra = {k: v for k, v in desc.items() if k in ("protected", "positive")}
            unknown = set(desc) - {"role", "protected", "positive"}
            if unknown:
                raise SchemaError(f"column {name!r}: unknown descriptor keys {sorted(unknown)}")
            schema[name] = ColumnRole(str(desc["role"]), **extra)
        else:
            raise SchemaError(f"column {name!r}: descriptor must be a string or object")
    return schema


def _as_numeric(name: str, values: Sequence) -> np.ndarray:
    try:
        arr = np.array(values, dtype=np.float64)  # copy: callers keep their arrays
    except (TypeError, ValueError):
        raise DataError(f"column {name!r}: values are not numeric") from None
    arr.flags.writeable = False
    return arr


def _as_text(name: str, values: Sequence) -> np.ndarray:
    arr = np.asarray([str(v) for v in values], dtype=str)
    arr.flags.writeable = False
    return arr


class Dataset:
    """Immutable table with one column per schema entry, all of length n."""

    def __init__(self, schema: Mapping[str, ColumnRole], columns: Mapping[str, Sequence]):
        self.schema: dict[str, ColumnRole] = dict(schema)
        if set(self.schema) != set(columns):
            raise SchemaError("schema and columns must cover the same names")
        self._columns: dict[str, np.ndarray] = {}
        n = None
        for name, role in self.schema.items():
            col = columns[name]
            arr = _as_numeric(name, col) if role.kind == NUMERIC else _as_text(name, col)
            if n is None:
                n = len(arr)
            elif len(arr) != n:
                raise DataError(f"column {name!r} has {len(arr)} entries, expected {n}")
            self._columns[name] = arr
        if n is None or n < 1:
            raise DataError("dataset must contain at least one row")
        self.n = n
        self._check_roles()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def _unchecked(cls, schema: dict[str, ColumnRole], columns: dict[str, np.ndarray], n: int) -> "Dataset":
        # bypass role validation for derived datasets whose structure is
        # preserved by construction (row subsets, single-column swaps)
        d = cls.__new__(cls)
        d.schema = schema
        d._columns = columns
        d.n = n
        return d

    def _check_roles(self) -> None:
        sensitive = [n for n, r in self.schema.items() if r.kind == SENSITIVE]
        if len(sensitive) != 1:
            raise SchemaError(f"expected exactly one sensitive column, found {len(sensitive)}")
        for kind in (DECISION, OUTCOME):
            found = [n for n, r in self.schema.items() if r.kind == kind]
            if len(found) > 1:
                raise SchemaError(f"at most one {kind} column allowed, found {len(found)}")
        for name, role in self.schema.items():
            if role.kind not in _BINARY_KINDS:
                continue
            values = self._columns[name]
            n_missing = int(np.count_nonzero(values == ""))
            if n_missing:
                raise DataError(f"column {name!r} ({role.kind}) has {n_missing} missing values")
            observed = set(np.unique(values).tolist())
            if len(observed) > 2:
                raise DataError(
                    f"column {name!r} ({role.kind}) must be binary, "
                    f"found {len(observed)} distinct values"
                )
            declared = role.protected if role.kind == SENSITIVE else role.positive
            if declared not in observed:
                raise DataError(
                    f"column {name!r}: declared modality {declared!r} not among observed values"
                )

    # -- basic access ----------------------------------------------------------

    def values(self, name: str) -> np.ndarray:
        if name not in self._columns:
            raise SchemaError(f"no column named {name!r}")
        return self._columns[name]

    def missing_mask(self, name: str) -> np.ndarray:
        col = self.values(name)
        if self.schema[name].kind == NUMERIC:
            return np.isnan(col)
        return col == ""

    def _role_column(self, kind: str) -> str | None:
        for name, role in self.schema.items():
            if role.kind == kind:
                return name
        return None

    @property
    def sensitive_column(self) -> str:
        name = self._role_column(SENSITIVE)
        assert name is not None  # guaranteed by _check_roles
        return name

    @property
    def decision_column(self) -> str | None:
        return self._role_column(DECISION)

    @property
    def outcome_column(self) -> str | None:
        return self._role_column(OUTCOME)

    @property
    def numeric_features(self) -> list[str]:
        return [n for n, r in self.schema.items() if r.kind == NUMERIC]

    @property
    def categorical_features(self) -> list[str]:
        return [n for n, r in self.schema.items() if r.kind == CATEGORICAL]

    def protected_mask(self) -> np.ndarray:
        name = self.sensitive_column
        return self.values(name) == self.schema[name].protected

    def sensitive_modalities(self) -> tuple[str, str]:
        """(protected label, non-protected label). Degenerate columns repeat the label."""
        name = self.sensitive_column
        protected = self.schema[name].protected
        others = [v for v in np.unique(self.values(name)).tolist() if v != protected]
        return str(protected), str(others[0]) if others else str(protected)

    def _binary_mask(self, kind: str) -> np.ndarray:
        name = self._role_column(kind)
        if name is None:
            raise DataError(f"dataset has no {kind} column")
        return self.values(name) == self.schema[name].positive

    def positive_decision_mask(self) -> np.ndarray:
        return self._binary_mask(DECISION)

    def positive_outcome_mask(self) -> np.ndarray:
        return self._binary_mask(OUTCOME)

    # -- pure transformations --------------------------------------------------

    def take(self, indices: Sequence[int]) -> "Dataset":
        """Row subset, preserving schema and column order."""
        idx = np.asarray(indices, dtype=np.int64)
        cols = {}
        for name, arr in self._columns.items():
            sub = arr[idx]
            sub.flags.writeable = False
            cols[name] = sub
        return Dataset._unchecked(self.schema, cols, len(idx))

    def with_values(self, name: str, values: Sequence) -> "Dataset":
        """Copy of the dataset with one column replaced."""
        role = self.schema.get(name)
        if role is None:
            raise SchemaError(f"no column named {name!r}")
        arr = _as_numeric(name, values) if role.kind == NUMERIC else _as_text(name, values)
        if len(arr) != self.n:
            raise DataError(f"replacement for {name!r} has {len(arr)} entries, expected {self.n}")
        cols = dict(self._columns)
        cols[name] = arr
        return Dataset._unchecked(self.schema, cols, self.n)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.schema != other.schema or self.n != other.n:
            return False
        for name, arr in self._columns.items():
            theirs = other._columns[name]
            if arr.dtype.kind == "f":
                if not np.array_equal(arr, theirs, equal_nan=True):
                    return False
            elif not np.array_equal(arr, theirs):
                return False
        return True

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, columns={list(self.schema)})"


# -- loading / saving ----------------------------------------------------------


def load_csv(path: str | Path, schema: Mapping[str, object]) -> Dataset:
    """Load an RFC 4180 CSV (header row required) against a role declaration.

    Columns present in the file but absent from the schema are kept with the
    ``ignored`` role. Empty cells are missing values.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    roles = schema if all(isinstance(v, ColumnRole) for v in schema.values()) else parse_schema(schema)

    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty, header row required") from None
        rows = list(reader)

    unknown = [name for name in roles if name not in header]
    if unknown:
        raise SchemaError(f"{path}: schema names {unknown} not in header {header}")

    full_schema: dict[str, ColumnRole] = {}
    for name in header:
        full_schema[name] = roles.get(name, ColumnRole(IGNORED))

    columns: dict[str, list] = {name: [] for name in header}
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        for name, cell in zip(header, row):
            role = full_schema[name]
            if role.kind == NUMERIC:
                if cell == "":
                    columns[name].append(float("nan"))
                else:
                    try:
                        columns[name].append(float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}: row {i + 2}, column {name!r}: "
                            f"cannot parse {cell!r} as a number"
                        ) from None
            else:
                columns[name].append(cell)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(full_schema, columns)


def save_csv(d: Dataset, path: str | Path) -> None:
    """Write the dataset back out; numeric cells use shortest round-trip repr."""
    path = Path(path)
    names = list(d.schema)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        cols = [d.values(n) for n in names]
        numeric = [d.schema[n].kind == NUMERIC for n in names]
        for i in range(d.n):
            row = []
            for col, is_num in zip(cols, numeric):
                v = col[i]
                if is_num:
                    row.append("" if np.isnan(v) else repr(float(v)))
                else:
                    row.append(str(v))
            writer.writerow(row)


# -- splitting / validation -----------------------------------------------------


def split(d: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint train/test partition, stratified on the sensitive attribute.

    Test size is round(n * test_fraction) clamped to [1, n-1]; per-group test
    counts follow the group proportions (largest-remainder rounding) and are
    clamped so both parts keep at least one row of every observed modality.
    Deterministic for a fixed seed.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if d.n < 2:
        raise DataError(f"cannot split a dataset with n={d.n}")

    protected = d.protected_mask()
    groups = [np.flatnonzero(protected), np.flatnonzero(~protected)]
    groups = [g for g in groups if len(g) > 0]
    for g in groups:
        if len(g) < 2:
            raise DataError("a sensitive modality has fewer than 2 rows; stratified split impossible")

    test_size = int(round(d.n * test_fraction))
    test_size = max(1, min(d.n - 1, test_size))

    quotas = [test_size * len(g) / d.n for g in groups]
    counts = [int(np.floor(q)) for q in quotas]
    remainder = test_size - sum(counts)
    order = sorted(range(len(groups)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    # keep every modality present on both sides
    for i, g in enumerate(groups):
        counts[i] = max(1, min(len(g) - 1, counts[i]))
    drift = test_size - sum(counts)
    while drift != 0:
        step = 1 if drift > 0 else -1
        moved = False
        for i, g in enumerate(groups):
            new = counts[i] + step
            if 1 <= new <= len(g) - 1:
                counts[i] = new
                drift -= step
                moved = True
                break
        if not moved:
            break  # bounds saturated; sizes stay as close as feasible

    rng = CounterRng(seed)
    test_idx: list[int] = []
    for g, k in zip(groups, counts):
        perm = rng.permutation(len(g))
        test_idx.extend(g[perm[:k]].tolist())
    test_set = set(test_idx)
    train_idx = [i for i in range(d.n) if i not in test_set]
    return d.take(train_idx), d.take(sorted(test_idx))


def validate(d: Dataset) -> dict:
    """Reporting pass: per-column missing counts, modality counts, group sizes."""
    report: dict = {"n": d.n, "columns": {}, "flags": []}
    for name, role in d.schema.items():
        entry: dict = {"role": role.kind, "missing": int(np.count_nonzero(d.missing_mask(name)))}
        if role.kind in _BINARY_KINDS:
            values, counts = np.unique(d.values(name), return_counts=True)
            entry["modalities"] = {str(v): int(c) for v, c in zip(values, counts)}
            if role.kind == SENSITIVE:
                entry["protected"] = role.protected
            else:
                entry["positive"] = role.positive
        report["columns"][name] = entry

    protected = d.protected_mask()
    n1 = int(np.count_nonzero(protected))
    n2 = d.n - n1
    report["group_sizes"] = {"protected": n1, "non_protected": n2}
    if n1 == 0:
        report["flags"].append("empty protected group")
    if n2 == 0:
        report["flags"].append("empty non-protected group")
    return report
