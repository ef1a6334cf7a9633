"""Flow-record datasets: CSV ingestion, pruning, splitting, synthesis, and caching.

A FlowDataset is the currency passed between every pipeline stage: a numeric
feature matrix plus column descriptors, optional binary labels (0 = benign,
1 = attack), and raw string storage for categorical columns.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical-string"
META = "meta"

# Flow identifiers and timestamps carry no detection signal.
DEFAULT_DROP_COLUMNS = ("pkSeqID", "stime", "ltime")

DATASET_FORMAT = "nfdlm.dataset"
DATASET_FORMAT_VERSION = 1

# Up to this many independent feature columns carry the class-mean offset in
# synthetic data; matches the depth of the mutual-information presets so that
# top-k selection retains the full margin.
SIGNAL_DIMS = 11


@dataclass(frozen=True)
class ColumnDescriptor:
    name: str
    kind: str  # numeric | categorical-string | meta
    index: int


@dataclass
class FlowDataset:
    """Column-described flow records.

    matrix holds only the numeric columns (row-major, float64, one column per
    kind=numeric descriptor, in descriptor order). Categorical-string columns
    keep their raw cell values in `strings`; meta columns (e.g. the consumed
    label column) keep descriptors only.
    """

    columns: list[ColumnDescriptor]
    matrix: np.ndarray
    labels: np.ndarray | None = None
    strings: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.matrix = np.array(self.matrix, dtype=np.float64, order="C")
        if self.matrix.ndim != 2:
            raise DataError("matrix must be 2-dimensional")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names")
        if self.matrix.shape[1] != len(self.feature_names):
            raise DataError(
                f"matrix has {self.matrix.shape[1]} columns, "
                f"expected {len(self.feature_names)} numeric columns"
            )
        if not np.isfinite(self.matrix).all():
            raise DataError("matrix contains NaN or Inf values")
        if self.labels is not None:
            self.labels = np.array(self.labels, dtype=np.int64)
            if self.labels.shape != (self.row_count,):
                raise DataError("labels length does not match row count")
            if self.labels.size and not np.isin(self.labels, (0, 1)).all():
                raise DataError("labels must be 0 or 1")
            self.labels.flags.writeable = False
        expected_strings = {c.name for c in self.columns if c.kind == CATEGORICAL}
        if set(self.strings) != expected_strings:
            raise DataError("string storage does not match categorical columns")
        for name, values in self.strings.items():
            if len(values) != self.row_count:
                raise DataError(f"string column '{name}' has wrong length")
        self.matrix.flags.writeable = False  # datasets are immutable once built

    @property
    def row_count(self) -> int:
        return self.matrix.shape[0]

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.columns if c.kind == NUMERIC]

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> ColumnDescriptor:
        for c in self.columns:
            if c.name == name:
                return c
        raise DataError(f"no such column: '{name}'")

    def feature_column(self, name: str) -> np.ndarray:
        """One numeric column as a vector."""
        try:
            j = self.feature_names.index(name)
        except ValueError:
            raise DataError(f"no such numeric column: '{name}'") from None
        return self.matrix[:, j]

    def feature_matrix(self, names: list[str]) -> np.ndarray:
        """Numeric sub-matrix with columns in the given name order."""
        order = self.feature_names
        idx = []
        for name in names:
            try:
                idx.append(order.index(name))
            except ValueError:
                raise DataError(f"no such numeric column: '{name}'") from None
        return np.ascontiguousarray(self.matrix[:, idx])


def _reindexed(descriptors: list[ColumnDescriptor]) -> list[ColumnDescriptor]:
    return [ColumnDescriptor(c.name, c.kind, i) for i, c in enumerate(descriptors)]


def take_rows(ds: FlowDataset, rows: np.ndarray) -> FlowDataset:
    """Row subset in the given order; column structure unchanged."""
    rows = np.asarray(rows, dtype=np.int64)
    return FlowDataset(
        columns=list(ds.columns),
        matrix=ds.matrix[rows],
        labels=None if ds.labels is None else ds.labels[rows],
        strings={name: [vals[i] for i in rows] for name, vals in ds.strings.items()},
    )


def select_features(ds: FlowDataset, names: list[str]) -> FlowDataset:
    """Modeling view keeping only the named numeric columns (plus labels)."""
    matrix = ds.feature_matrix(names)
    columns = [ColumnDescriptor(name, NUMERIC, i) for i, name in enumerate(names)]
    return FlowDataset(columns=columns, matrix=matrix, labels=ds.labels, strings={})


def parse_flow_csv(path: str | os.PathLike, label_column: str, positive_label: str) -> FlowDataset:
    """Load a header-bearing CSV of flow records.

    Column kinds are inferred per column: if every cell parses as a finite
    number the column is numeric, otherwise categorical-string. The label
    column is consumed into the 0/1 label vector (1 where the cell equals
    positive_label) and kept as a kind=meta descriptor so it can never leak
    into a feature matrix.

    Hard errors: missing file or label column, duplicate header names, ragged
    rows, empty cells, non-finite numeric cells, and more than two distinct
    label values (filter the file down to two classes first).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataError(f"{path}: empty file, expected a header row")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        if label_column not in header:
            raise DataError(f"{path}: label column '{label_column}' not in header")
        rows: list[list[str]] = []
        for i, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {i} has {len(row)} cells, expected {len(header)}"
                )
            rows.append(row)

    label_idx = header.index(label_column)
    label_values = [row[label_idx] for row in rows]
    distinct = sorted(set(label_values))
    if len(distinct) > 2:
        raise DataError(
            f"{path}: label column '{label_column}' has {len(distinct)} distinct "
            f"values {distinct}; filter to two classes before ingesting"
        )
    labels = np.fromiter(
        (1 if v == positive_label else 0 for v in label_values), dtype=np.int64, count=len(rows)
    )

    columns: list[ColumnDescriptor] = []
    numeric_cols: list[np.ndarray] = []
    strings: dict[str, list[str]] = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in rows]
        for i, cell in enumerate(cells, start=1):
            if not cell.strip():
                raise DataError(f"{path}: row {i}: missing value in column '{name}'")
        if j == label_idx:
            columns.append(ColumnDescriptor(name, META, j))
            continue
        values = np.empty(len(cells))
        numeric = True
        for i, cell in enumerate(cells):
            try:
                values[i] = float(cell)
            except ValueError:
                numeric = False
                break
        if numeric and len(cells) and not np.isfinite(values).all():
            bad = int(np.flatnonzero(~np.isfinite(values))[0]) + 1
            raise DataError(f"{path}: row {bad}: non-finite value in column '{name}'")
        if numeric:
            columns.append(ColumnDescriptor(name, NUMERIC, j))
            numeric_cols.append(values)
        else:
            columns.append(ColumnDescriptor(name, CATEGORICAL, j))
            strings[name] = cells

    matrix = np.column_stack(numeric_cols) if numeric_cols else np.empty((len(rows), 0))
    return FlowDataset(columns=columns, matrix=matrix, labels=labels, strings=strings)


def drop_columns(
    ds: FlowDataset,
    drop_names: list[str] | None = None,
    drop_string_columns: bool = False,
) -> FlowDataset:
    """Remove named columns and, optionally, every categorical-string column.

    drop_names=None applies DEFAULT_DROP_COLUMNS restricted to columns that
    exist; explicitly named columns must exist or this is a hard error.
    Labels are untouched.
    """
    present = set(ds.column_names)
    if drop_names is None:
        to_drop = {n for n in DEFAULT_DROP_COLUMNS if n in present}
    else:
        unknown = [n for n in drop_names if n not in present]
        if unknown:
            raise DataError(f"unknown columns in drop list: {unknown}")
        to_drop = set(drop_names)
    if drop_string_columns:
        to_drop |= {c.name for c in ds.columns if c.kind == CATEGORICAL}

    kept = [c for c in ds.columns if c.name not in to_drop]
    kept_numeric = [i for i, name in enumerate(ds.feature_names) if name not in to_drop]
    return FlowDataset(
        columns=_reindexed(kept),
        matrix=ds.matrix[:, kept_numeric],
        labels=ds.labels,
        strings={n: v for n, v in ds.strings.items() if n not in to_drop},
    )


def stratified_split(
    ds: FlowDataset, test_fraction: float, seed: int
) -> tuple[FlowDataset, FlowDataset]:
    """Per-class random split; test gets round(fraction * class size) rows.

    Row order within each part follows the original dataset. Deterministic
    for a given seed. Hard error if labels are absent or either class has
    fewer than two rows.
    """
    if ds.labels is None:
        raise DataError("stratified_split requires labels")
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    classes, counts = np.unique(ds.labels, return_counts=True)
    if classes.size < 2:
        raise DataError("stratified_split requires both classes present")
    if counts.min() < 2:
        raise DataError("stratified_split requires at least 2 rows per class")

    rng = np.random.default_rng(seed)
    test_rows: list[np.ndarray] = []
    train_rows: list[np.ndarray] = []
    for cls in classes:
        idx = np.flatnonzero(ds.labels == cls)
        perm = rng.permutation(idx.size)
        n_test = int(round(test_fraction * idx.size))
        test_rows.append(idx[perm[:n_test]])
        train_rows.append(idx[perm[n_test:]])
    train_idx = np.sort(np.concatenate(train_rows))
    test_idx = np.sort(np.concatenate(test_rows))
    return take_rows(ds, train_idx), take_rows(ds, test_idx)


@dataclass(frozen=True)
class SynthesisSpec:
    """Recipe for a desk-scale synthetic flow dataset."""

    attack_count: int
    benign_count: int
    feature_count: int
    planted_duplicate_pairs: int = 0
    class_separation: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.attack_count, self.benign_count, self.planted_duplicate_pairs) < 0:
            raise DataError("counts must be non-negative")
        if self.feature_count < 2:
            raise DataError("feature_count must be at least 2")
        if self.class_separation < 0:
            raise DataError("class_separation must be non-negative")


def synthetic_signal_columns(spec: SynthesisSpec) -> list[int]:
    """Indices of the independently generated columns that carry class signal.

    Non-copy columns are ranked uniques-first (everything past the duplicate
    block, then the even-indexed duplicate sources); the first SIGNAL_DIMS of
    them share the class-mean offset equally.
    """
    dup = spec.planted_duplicate_pairs
    candidates = list(range(2 * dup, spec.feature_count))
    candidates += [2 * t for t in range(dup)]
    return candidates[: min(SIGNAL_DIMS, len(candidates))]


def generate_synthetic_flows(spec: SynthesisSpec) -> FlowDataset:
    """Two Gaussian class clusters with optional planted near-duplicate columns.

    Attack rows come first, then benign. The class-mean distance measured over
    the independent (non-copy) columns equals class_separation; it is spread
    equally over the columns named by synthetic_signal_columns. Each planted
    pair occupies columns (2t, 2t+1): the later column is an affine near-copy
    of the earlier one with |pearson r| > 0.99. Pure function of the spec.
    """
    if spec.feature_count < 2 * spec.planted_duplicate_pairs:
        raise DataError(
            f"feature_count {spec.feature_count} cannot hold "
            f"{spec.planted_duplicate_pairs} duplicate pairs"
        )
    n = spec.attack_count + spec.benign_count
    rng = np.random.default_rng(spec.seed)
    matrix = rng.standard_normal((n, spec.feature_count))
    labels = np.concatenate(
        [np.ones(spec.attack_count, dtype=np.int64), np.zeros(spec.benign_count, dtype=np.int64)]
    )

    signal = synthetic_signal_columns(spec)
    if signal and spec.class_separation > 0:
        shift = spec.class_separation / math.sqrt(len(signal))
        for j in signal:
            matrix[labels == 1, j] += shift / 2.0
            matrix[labels == 0, j] -= shift / 2.0

    for t in range(spec.planted_duplicate_pairs):
        src, dst = 2 * t, 2 * t + 1
        scale = rng.uniform(0.75, 1.5) * (1 if rng.integers(0, 2) else -1)
        offset = rng.uniform(-2.0, 2.0)
        # Noise at 5% of the copy's scale keeps |r| around 0.999.
        noise = rng.normal(0.0, 0.05 * abs(scale), n)
        matrix[:, dst] = scale * matrix[:, src] + offset + noise

    width = max(2, len(str(spec.feature_count - 1)))
    columns = [
        ColumnDescriptor(f"f{j:0{width}d}", NUMERIC, j) for j in range(spec.feature_count)
    ]
    return FlowDataset(columns=columns, matrix=matrix, labels=labels, strings={})


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write via temp file + rename so readers never observe partial files."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def save_dataset(ds: FlowDataset, path: str | os.PathLike) -> None:
    """Cache a dataset: one JSON header line, then raw float64 column payloads.

    Numeric values round-trip bitwise (the payload is the raw IEEE-754 bytes,
    little-endian, one column after another in feature order).
    """
    header = {
        "format": DATASET_FORMAT,
        "format_version": DATASET_FORMAT_VERSION,
        "row_count": ds.row_count,
        "columns": [{"name": c.name, "kind": c.kind} for c in ds.columns],
        "labels": None if ds.labels is None else ds.labels.tolist(),
        "strings": ds.strings,
    }
    payload = b"".join(
        np.ascontiguousarray(ds.matrix[:, j], dtype="<f8").tobytes()
        for j in range(ds.matrix.shape[1])
    )
    atomic_write_bytes(path, json.dumps(header).encode("utf-8") + b"\n" + payload)


def load_dataset(path: str | os.PathLike) -> FlowDataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    blob = path.read_bytes()
    nl = blob.find(b"\n")
    if nl < 0:
        raise DataError(f"{path}: not a dataset file (missing header line)")
    try:
        header = json.loads(blob[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: bad dataset header: {exc}") from exc
    if header.get("format") != DATASET_FORMAT:
        raise DataError(f"{path}: not a {DATASET_FORMAT} file")
    if header.get("format_version") != DATASET_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {header.get('format_version')}")

    columns = [
        ColumnDescriptor(c["name"], c["kind"], i) for i, c in enumerate(header["columns"])
    ]
    n = int(header["row_count"])
    n_numeric = sum(1 for c in columns if c.kind == NUMERIC)
    payload = blob[nl + 1 :]
    if len(payload) != 8 * n * n_numeric:
        raise DataError(f"{path}: payload size mismatch")
    flat = np.frombuffer(payload, dtype="<f8")
    matrix = flat.reshape(n_numeric, n).T if n_numeric else np.empty((n, 0))
    labels = header["labels"]
    return FlowDataset(
        columns=columns,
        matrix=matrix,
        labels=None if labels is None else np.asarray(labels, dtype=np.int64),
        strings={k: list(v) for k, v in header["strings"].items()},
    )


def write_flow_csv(
    ds: FlowDataset,
    path: str | os.PathLike,
    label_column: str = "category",
    positive_label: str = "DDoS",
    negative_label: str = "Normal",
) -> None:
    """Write a dataset back to CSV.

    Numeric cells use shortest round-trip formatting, so parse -> write ->
    parse is bitwise lossless on numeric columns. Meta columns are re-emitted
    from the label vector; if the dataset has labels but no meta column, a
    label column is appended.
    """
    header: list[str] = []
    getters = []
    numeric_index = {name: j for j, name in enumerate(ds.feature_names)}
    for c in ds.columns:
        if c.kind == NUMERIC:
            j = numeric_index[c.name]
            header.append(c.name)
            getters.append(lambda i, j=j: repr(float(ds.matrix[i, j])))
        elif c.kind == CATEGORICAL:
            vals = ds.strings[c.name]
            header.append(c.name)
            getters.append(lambda i, vals=vals: vals[i])
        else:  # meta: regenerate from labels
            if ds.labels is None:
                continue
            header.append(c.name)
            getters.append(
                lambda i: positive_label if ds.labels[i] else negative_label
            )
    if ds.labels is not None and not any(c.kind == META for c in ds.columns):
        header.append(label_column)
        getters.append(lambda i: positive_label if ds.labels[i] else negative_label)

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(ds.row_count):
                writer.writerow([get(i) for get in getters])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
