"""Class rebalancing (SMOTE), standard scaling, and one-hot encoding."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .flow_data import CATEGORICAL, NUMERIC, ColumnDescriptor, FlowDataset, _reindexed


@dataclass
class ScalerParams:
    """Per-column mean and population standard deviation (divide by N)."""

    column_names: list[str]
    means: np.ndarray
    stdevs: np.ndarray

    def __post_init__(self) -> None:
        self.means = np.asarray(self.means, dtype=np.float64)
        self.stdevs = np.asarray(self.stdevs, dtype=np.float64)
        if not (len(self.column_names) == self.means.size == self.stdevs.size):
            raise DataError("scaler parameter lengths disagree")
        if (self.stdevs < 0).any():
            raise DataError("stdev must be non-negative")

    def to_dict(self) -> dict:
        return {
            "column_names": list(self.column_names),
            "means": self.means.tolist(),
            "stdevs": self.stdevs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(list(d["column_names"]), d["means"], d["stdevs"])


@dataclass
class SmoteConfig:
    k_neighbors: int = 5
    target: str = "majority"  # upsample the minority to the majority count
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if self.target != "majority":
            raise ValueError(f"unsupported SMOTE target: {self.target!r}")


def fit_scaler(train: FlowDataset) -> ScalerParams:
    """Mean and population stdev for every numeric column."""
    if train.row_count == 0:
        raise DataError("cannot fit scaler on an empty dataset")
    means = train.matrix.mean(axis=0)
    stdevs = train.matrix.std(axis=0)  # ddof=0: population convention
    # A column of identical values must report stdev exactly 0; summation
    # rounding in mean/std would otherwise leave ~1e-16 residue and the
    # zero-stdev rule in apply_scaler would never fire.
    constant = train.matrix.min(axis=0) == train.matrix.max(axis=0)
    means[constant] = train.matrix.min(axis=0)[constant]
    stdevs[constant] = 0.0
    return ScalerParams(
        column_names=train.feature_names,
        means=means,
        stdevs=stdevs,
    )


def scale_columns(x: np.ndarray, means: np.ndarray, stdevs: np.ndarray) -> np.ndarray:
    """(x - mean) / stdev per column; constant columns (stdev 0) map to zeros."""
    safe = np.where(stdevs == 0.0, 1.0, stdevs)
    scaled = (x - means) / safe
    scaled[:, stdevs == 0.0] = 0.0
    return scaled


def apply_scaler(params: ScalerParams, ds: FlowDataset) -> FlowDataset:
    if params.column_names != ds.feature_names:
        raise DataError(
            "scaler columns do not match dataset columns: "
            f"{params.column_names} vs {ds.feature_names}"
        )
    return FlowDataset(
        columns=list(ds.columns),
        matrix=scale_columns(ds.matrix, params.means, params.stdevs),
        labels=ds.labels,
        strings=dict(ds.strings),
    )


def smote_resample(train: FlowDataset, cfg: SmoteConfig) -> FlowDataset:
    """Upsample the minority class to the majority count.

    Each synthetic row is m + u * (n - m) for a minority row m, one of its k
    nearest minority neighbors n (Euclidean distance on the feature matrix),
    and u uniform in [0, 1). Original rows are preserved verbatim and the
    synthetic block is appended. Each minority row draws from its own RNG
    stream derived from (seed, row position), so output is reproducible
    bitwise regardless of how the work might be scheduled.
    """
    if train.labels is None:
        raise DataError("smote_resample requires labels")
    if train.strings:
        raise DataError(
            "smote_resample requires numeric features only; "
            "drop or one-hot encode categorical columns first"
        )
    n_pos = int(train.labels.sum())
    n_neg = train.row_count - n_pos
    if n_pos == n_neg:
        return train
    minority_label = 1 if n_pos < n_neg else 0
    minority_idx = np.flatnonzero(train.labels == minority_label)
    minority_count = minority_idx.size
    majority_count = train.row_count - minority_count
    if minority_count < 2:
        raise DataError("SMOTE needs at least 2 minority rows")

    k = cfg.k_neighbors
    if k > minority_count - 1:
        k = minority_count - 1
        warnings.warn(
            f"k_neighbors clamped to {k} (minority class has {minority_count} rows)",
            stacklevel=2,
        )

    minority = train.matrix[minority_idx]
    # Pairwise squared distances among minority rows; self excluded by index.
    sq = np.einsum("ij,ij->i", minority, minority)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (minority @ minority.T)
    np.fill_diagonal(d2, np.inf)
    neighbor_ids = np.argsort(d2, axis=1, kind="stable")[:, :k]

    need = majority_count - minority_count
    base, extra = divmod(need, minority_count)
    synthetic = np.empty((need, train.matrix.shape[1]))
    out = 0
    for i in range(minority_count):
        count = base + (1 if i < extra else 0)
        if count == 0:
            continue
        rng = np.random.default_rng([cfg.seed, i])
        picks = rng.integers(0, k, size=count)
        u = rng.random(count)
        m = minority[i]
        neighbors = minority[neighbor_ids[i][picks]]
        synthetic[out : out + count] = m + u[:, None] * (neighbors - m)
        out += count

    return FlowDataset(
        columns=list(train.columns),
        matrix=np.vstack([train.matrix, synthetic]),
        labels=np.concatenate(
            [train.labels, np.full(need, minority_label, dtype=np.int64)]
        ),
        strings={},
    )


def one_hot_encode(ds: FlowDataset, column: str) -> FlowDataset:
    """Replace a categorical column with one 0/1 indicator column per value.

    Indicator columns are named `column=value` and inserted at the original
    column's position, ordered lexicographically by value.
    """
    desc = ds.column(column)
    if desc.kind != CATEGORICAL:
        raise DataError(f"one_hot_encode requires a categorical-string column, "
                        f"'{column}' is {desc.kind}")
    values = ds.strings[column]
    distinct = sorted(set(values))
    indicators = np.zeros((ds.row_count, len(distinct)))
    position = {v: j for j, v in enumerate(distinct)}
    for i, v in enumerate(values):
        indicators[i, position[v]] = 1.0

    new_columns: list[ColumnDescriptor] = []
    numeric_before = 0  # numeric columns preceding the encoded one
    for c in ds.columns:
        if c.name == column:
            for v in distinct:
                new_columns.append(ColumnDescriptor(f"{column}={v}", NUMERIC, 0))
        else:
            if c.kind == NUMERIC and c.index < desc.index:
                numeric_before += 1
            new_columns.append(c)
    matrix = np.hstack(
        [ds.matrix[:, :numeric_before], indicators, ds.matrix[:, numeric_before:]]
    )
    strings = {n: v for n, v in ds.strings.items() if n != column}
    return FlowDataset(
        columns=_reindexed(new_columns), matrix=matrix, labels=ds.labels, strings=strings
    )
