"""Datasets, schemas, standardization and cross-validation splits.

A :class:`Dataset` is an immutable bundle of a feature matrix (rows are
samples), 0-based integer class labels, and per-column metadata. CSV
loading is schema-driven: the schema names the label column, which
columns are binary, which are categorical (one-hot expanded) and which
are dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    DegenerateColumnError,
    DimensionMismatchError,
    ParseError,
    SchemaError,
    TooFewRowsError,
)

CONTINUOUS = "continuous"
BINARY = "binary"


@dataclass(frozen=True)
class DatasetSchema:
    """Declarative description of a CSV: label column, column kinds, drops.

    ``categorical`` columns are one-hot expanded into binary indicator
    columns named ``<col>_<value>``. ``binary`` columns are kept on {0,1}
    and are exempt from standardization.
    """

    label: str
    binary: tuple[str, ...] = ()
    categorical: tuple[str, ...] = ()
    drop: tuple[str, ...] = ()

    @staticmethod
    def from_json(path: str | Path) -> "DatasetSchema":
        doc = json.loads(Path(path).read_text())
        return DatasetSchema(
            label=doc["label"],
            binary=tuple(doc.get("binary", ())),
            categorical=tuple(doc.get("categorical", ())),
            drop=tuple(doc.get("drop", ())),
        )

    def to_json(self, path: str | Path) -> None:
        doc = {
            "label": self.label,
            "binary": list(self.binary),
            "categorical": list(self.categorical),
            "drop": list(self.drop),
        }
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def insurance_schema(one_hot_region: bool = True, drop_charges: bool = False) -> DatasetSchema:
    """Default schema for the insurance-claim CSV.

    ``one_hot_region=False`` keeps region as a single small-integer column
    (D=8 before encoding); the default expands it to four indicators.
    """
    drop = ("charges",) if drop_charges else ()
    if one_hot_region:
        return DatasetSchema(label="insuranceclaim", binary=("sex", "smoker"),
                             categorical=("region",), drop=drop)
    return DatasetSchema(label="insuranceclaim", binary=("sex", "smoker"), drop=drop)


def heart_schema(include_time: bool = False) -> DatasetSchema:
    """Default schema for the heart-failure CSV.

    The follow-up duration column leaks the outcome, so it is dropped
    unless explicitly requested.
    """
    drop = () if include_time else ("time",)
    return DatasetSchema(
        label="DEATH_EVENT",
        binary=("anaemia", "diabetes", "high_blood_pressure", "sex", "smoking"),
        drop=drop,
    )


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with named columns and integer class labels.

    Invariants: no missing values, labels in {0..n_classes-1}, unique
    column names, one kind tag per column.
    """

    features: np.ndarray              # (T, D) float64
    labels: np.ndarray                # (T,) int64, 0-based
    column_names: tuple[str, ...]
    column_kinds: tuple[str, ...]     # CONTINUOUS | BINARY per column
    n_classes: int
    label_name: str = "label"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2:
            raise DimensionMismatchError("features must be a 2-D matrix")
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"{X.shape[0]} feature rows vs {y.shape[0]} labels")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise SchemaError("dataset needs at least one row and one column")
        if len(self.column_names) != X.shape[1]:
            raise SchemaError("one name per feature column required")
        if len(set(self.column_names)) != len(self.column_names):
            raise SchemaError("column names must be unique")
        if len(self.column_kinds) != X.shape[1]:
            raise SchemaError("one kind per feature column required")
        if not np.all(np.isfinite(X)):
            raise ParseError("features contain missing/non-finite values")
        if y.min() < 0 or y.max() >= self.n_classes:
            raise SchemaError("labels outside {0..n_classes-1}")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def one_hot_labels(self) -> np.ndarray:
        """(n_classes, T) indicator matrix of the labels."""
        out = np.zeros((self.n_classes, self.n_rows))
        out[self.labels, np.arange(self.n_rows)] = 1.0
        return out

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return replace(self, features=self.features[idx].copy(),
                       labels=self.labels[idx].copy())

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise SchemaError(f"no column named {name!r}") from None


def load_csv(path: str | Path, schema: DatasetSchema) -> Dataset:
    """Load an RFC-4180 CSV (header required) into a Dataset.

    Binary/categorical columns are encoded on {0,1}; the label column is
    extracted and must hold integer class codes starting at 0 (or any
    consecutive code set, which is remapped in sorted order).
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path}: empty file") from None
    if df.shape[0] == 0:
        raise ParseError(f"{path}: no data rows")

    if schema.label not in df.columns:
        raise SchemaError(f"{path}: missing label column {schema.label!r}")
    for col in (*schema.binary, *schema.categorical):
        if col not in df.columns:
            raise SchemaError(f"{path}: missing column {col!r}")

    df = df.drop(columns=[c for c in schema.drop if c in df.columns])

    raw_label = df[schema.label]
    df = df.drop(columns=[schema.label])

    names: list[str] = []
    kinds: list[str] = []
    cols: list[np.ndarray] = []
    for col in df.columns:
        series = df[col]
        numeric = pd.to_numeric(series, errors="coerce")
        bad = numeric.isna() & series.notna()
        if bad.any():
            row = int(np.flatnonzero(bad.values)[0])
            raise ParseError(f"{path}: non-numeric cell in column {col!r}, row {row}")
        if numeric.isna().any():
            row = int(np.flatnonzero(numeric.isna().values)[0])
            raise ParseError(f"{path}: missing value in column {col!r}, row {row}")
        values = numeric.to_numpy(dtype=float)
        if col in schema.categorical:
            levels = np.unique(values)
            for lv in levels:
                names.append(f"{col}_{lv:g}")
                kinds.append(BINARY)
                cols.append((values == lv).astype(float))
        elif col in schema.binary:
            uniq = set(np.unique(values))
            if not uniq <= {0.0, 1.0}:
                raise SchemaError(f"{path}: binary column {col!r} not on {{0,1}}")
            names.append(col)
            kinds.append(BINARY)
            cols.append(values)
        else:
            names.append(col)
            kinds.append(CONTINUOUS)
            cols.append(values)

    y_num = pd.to_numeric(raw_label, errors="coerce")
    if y_num.isna().any():
        row = int(np.flatnonzero(y_num.isna().values)[0])
        raise ParseError(f"{path}: non-numeric label, row {row}")
    codes = np.unique(y_num.values)
    remap = {v: i for i, v in enumerate(codes)}
    y = np.array([remap[v] for v in y_num.values], dtype=np.int64)

    return Dataset(
        features=np.column_stack(cols),
        labels=y,
        column_names=tuple(names),
        column_kinds=tuple(kinds),
        n_classes=len(codes),
        label_name=schema.label,
    )


@dataclass(frozen=True)
class Standardizer:
    """Per-column affine map to zero mean / unit spread (population stddev).

    Columns with ``transformed[i] == False`` (binary ones) pass through
    untouched so that deltas stay interpretable in the original units.
    """

    means: np.ndarray       # (D,)
    stds: np.ndarray        # (D,) strictly positive where transformed
    transformed: np.ndarray  # (D,) bool

    def __post_init__(self):
        m = np.asarray(self.means, dtype=float)
        s = np.asarray(self.stds, dtype=float)
        t = np.asarray(self.transformed, dtype=bool)
        if not (m.shape == s.shape == t.shape):
            raise DimensionMismatchError("standardizer fields must share shape")
        if np.any(s[t] <= 0):
            raise DegenerateColumnError("non-positive stddev on a transformed column")
        for a in (m, s, t):
            a.flags.writeable = False
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "stds", s)
        object.__setattr__(self, "transformed", t)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = X.copy()
        t = self.transformed
        out[..., t] = (X[..., t] - self.means[t]) / self.stds[t]
        return out

    def inverse_transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = X.copy()
        t = self.transformed
        out[..., t] = X[..., t] * self.stds[t] + self.means[t]
        return out

    def to_doc(self) -> dict:
        return {
            "kind": "affine",
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "transformed": self.transformed.astype(int).tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "Standardizer":
        return Standardizer(
            means=np.asarray(doc["means"], dtype=float),
            stds=np.asarray(doc["stds"], dtype=float),
            transformed=np.asarray(doc["transformed"], dtype=bool),
        )

    @staticmethod
    def identity(d: int) -> "Standardizer":
        return Standardizer(np.zeros(d), np.ones(d), np.zeros(d, dtype=bool))


def standardize(data: Dataset, fit_on) -> tuple[Dataset, Standardizer]:
    """Z-score continuous columns using statistics of the ``fit_on`` rows.

    Population stddev convention. Binary columns opt out. A constant
    continuous column on the fit rows is an error.
    """
    fit_on = np.asarray(fit_on)
    if fit_on.size == 0:
        raise TooFewRowsError("fit_on is empty")
    Xf = data.features[fit_on]
    means = Xf.mean(axis=0)
    stds = Xf.std(axis=0)  # population convention, ddof=0
    transformed = np.array([k == CONTINUOUS for k in data.column_kinds])
    zero = transformed & (stds <= 0)
    if zero.any():
        bad = data.column_names[int(np.flatnonzero(zero)[0])]
        raise DegenerateColumnError(f"zero variance in continuous column {bad!r}")
    means = np.where(transformed, means, 0.0)
    stds = np.where(transformed, stds, 1.0)
    std = Standardizer(means=means, stds=stds, transformed=transformed)
    out = replace(data, features=std.transform(data.features))
    return out, std


@dataclass(frozen=True)
class RankSmoother:
    """Per-column smoothed rank transform (Gaussian-kernel CDF mixture).

    Maps every column, binary ones included, onto a comparable (0, 1)
    scale: x -> mean_i n_i * Phi((x - v_i) / h) over the fit values v_i
    with multiplicities n_i and a robust plug-in bandwidth. Strictly
    monotone per column, hence exactly invertible (bisection). Puts
    heavy-tailed and binary columns on equal footing, which the cell
    classifier's feature-weight dynamics need; the affine Standardizer
    remains the default everywhere else.
    """

    values: tuple[np.ndarray, ...]    # per column: sorted unique fit values
    counts: tuple[np.ndarray, ...]    # per column: multiplicities
    bandwidths: np.ndarray            # per column: kernel width > 0

    def __post_init__(self):
        if len(self.values) != len(self.counts) or \
                len(self.values) != len(self.bandwidths):
            raise DimensionMismatchError("per-column fields disagree")
        if np.any(np.asarray(self.bandwidths) <= 0):
            raise DegenerateColumnError("non-positive bandwidth")

    @staticmethod
    def fit(X: np.ndarray) -> "RankSmoother":
        X = np.asarray(X, dtype=float)
        values, counts, bws = [], [], []
        for j in range(X.shape[1]):
            v, n = np.unique(X[:, j], return_counts=True)
            if v.size < 2:
                raise DegenerateColumnError(f"constant column {j}")
            med = np.median(X[:, j])
            sig = np.median(np.abs(X[:, j] - med)) / 0.6745
            if sig <= 0:
                sig = np.std(X[:, j])
            h = sig * (4.0 / (3.0 * X.shape[0])) ** 0.2
            values.append(v)
            counts.append(n.astype(float))
            bws.append(h)
        return RankSmoother(values=tuple(values), counts=tuple(counts),
                            bandwidths=np.asarray(bws))

    def _cdf(self, j: int, x: np.ndarray) -> np.ndarray:
        from scipy.stats import norm
        v, n, h = self.values[j], self.counts[j], self.bandwidths[j]
        z = (x[:, None] - v[None, :]) / h
        return (norm.cdf(z) * n[None, :]).sum(axis=1) / n.sum()

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        shape = X.shape
        X2 = np.atleast_2d(X)
        out = np.empty_like(X2)
        for j in range(X2.shape[1]):
            out[:, j] = self._cdf(j, X2[:, j])
        return out.reshape(shape)

    def inverse_transform(self, P: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        shape = P.shape
        P2 = np.atleast_2d(P)
        out = np.empty_like(P2)
        for j in range(P2.shape[1]):
            v, h = self.values[j], self.bandwidths[j]
            lo = np.full(P2.shape[0], v[0] - 12.0 * h)
            hi = np.full(P2.shape[0], v[-1] + 12.0 * h)
            target = np.clip(P2[:, j], 1e-15, 1 - 1e-15)
            for _ in range(80):  # bisection to ~1e-13 of the span
                mid = 0.5 * (lo + hi)
                above = self._cdf(j, mid) < target
                lo = np.where(above, mid, lo)
                hi = np.where(above, hi, mid)
            out[:, j] = 0.5 * (lo + hi)
        return out.reshape(shape)

    def to_doc(self) -> dict:
        return {
            "kind": "rank_smoother",
            "values": [v.tolist() for v in self.values],
            "counts": [c.tolist() for c in self.counts],
            "bandwidths": np.asarray(self.bandwidths).tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "RankSmoother":
        return RankSmoother(
            values=tuple(np.asarray(v, dtype=float) for v in doc["values"]),
            counts=tuple(np.asarray(c, dtype=float) for c in doc["counts"]),
            bandwidths=np.asarray(doc["bandwidths"], dtype=float),
        )


def rank_smooth(data: Dataset, fit_on) -> tuple[Dataset, RankSmoother]:
    """Smoothed-rank variant of standardize (all columns transformed)."""
    fit_on = np.asarray(fit_on)
    if fit_on.size == 0:
        raise TooFewRowsError("fit_on is empty")
    sm = RankSmoother.fit(data.features[fit_on])
    out = replace(data, features=sm.transform(data.features))
    return out, sm


def load_transform(doc: dict):
    """Dispatch a serialized feature transform document."""
    if doc.get("kind") == "rank_smoother":
        return RankSmoother.from_doc(doc)
    return Standardizer.from_doc(doc)


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/valid/test indices plus the seed that produced them."""

    train_idx: np.ndarray
    valid_idx: np.ndarray
    test_idx: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("train_idx", "valid_idx", "test_idx"):
            a = np.asarray(getattr(self, name), dtype=np.int64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        union = np.concatenate([self.train_idx, self.valid_idx, self.test_idx])
        if len(np.unique(union)) != len(union):
            raise SchemaError("split buckets overlap")


def split(n_rows: int, ratios: tuple[float, float, float] = (0.5, 0.25, 0.25),
          seed: int = 0) -> SplitSpec:
    """Seeded shuffle split into train/valid/test with the given ratios.

    Deterministic in (n_rows, ratios, seed); bucket sizes match the
    ratios within one element; every index lands in exactly one bucket.
    """
    if n_rows < 4:
        raise TooFewRowsError(f"need at least 4 rows, got {n_rows}")
    r_train, r_valid, r_test = ratios
    if abs(r_train + r_valid + r_test - 1.0) > 1e-9:
        raise SchemaError("ratios must sum to 1")
    perm = np.random.default_rng(seed).permutation(n_rows)
    n_train = int(round(n_rows * r_train))
    n_valid = int(round(n_rows * r_valid))
    n_train = min(max(n_train, 1), n_rows - 2)
    n_valid = min(max(n_valid, 1), n_rows - n_train - 1)
    return SplitSpec(
        train_idx=perm[:n_train],
        valid_idx=perm[n_train:n_train + n_valid],
        test_idx=perm[n_train + n_valid:],
        seed=seed,
    )
