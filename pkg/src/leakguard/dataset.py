"""In-memory tabular datasets with per-row provenance.

Every row of a :class:`TabularDataset` knows where it came from: loaded
from a file, duplicated from another row, or synthesized by a sampler.
Provenance is what makes train/test contamination detectable after the
fact, so all loading, splitting, and preprocessing operations preserve it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

CREDITCARD_SCHEMA = ("Time",) + tuple(f"V{i}" for i in range(1, 29)) + ("Amount", "Class")

LABEL_COLUMN = "Class"


class SchemaError(ValueError):
    """Header row does not match the expected column set."""


class CsvParseError(ValueError):
    """A cell failed to parse; carries the offending row and column."""

    def __init__(self, message: str, row: int, column: str):
        super().__init__(message)
        self.row = row
        self.column = column


class FitScope(str, Enum):
    """What data a preprocessing transform was fitted on."""

    TRAIN_ONLY = "train_only"
    FULL_DATASET = "full_dataset"


class HourMode(str, Enum):
    """How hour-of-day is derived from an elapsed-seconds column.

    PAPER_FAITHFUL keeps the raw hour count, so hours past the first day
    (>= 24) miss every named segment and fall through to Night.
    CORRECTED wraps the hour into [0, 24) before segmenting.
    """

    PAPER_FAITHFUL = "paper_faithful"
    CORRECTED = "corrected"


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero toward +inf."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class RowProvenance:
    """Origin of one dataset row.

    kind is one of "original", "duplicate", "synthetic". Duplicates and
    originals point back at a source row index in the dataset they were
    created from; synthetic rows record the generating method instead.
    """

    kind: str
    source_index: int | None = None
    method: str | None = None

    _KINDS = ("original", "duplicate", "synthetic")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown provenance kind {self.kind!r}")
        if self.kind in ("original", "duplicate"):
            if self.source_index is None or self.source_index < 0:
                raise ValueError(f"{self.kind} provenance needs a valid source_index")
        if self.kind == "synthetic" and not self.method:
            raise ValueError("synthetic provenance needs a non-empty method name")

    @classmethod
    def original(cls, source_index: int) -> "RowProvenance":
        return cls("original", source_index=source_index)

    @classmethod
    def duplicate(cls, source_index: int) -> "RowProvenance":
        return cls("duplicate", source_index=source_index)

    @classmethod
    def synthetic(cls, method: str) -> "RowProvenance":
        return cls("synthetic", method=method)

    @property
    def is_original(self) -> bool:
        return self.kind == "original"


@dataclass(frozen=True, eq=False)
class TabularDataset:
    """Immutable feature matrix with binary labels and row provenance.

    Parameters
    ----------
    features : (n_rows, n_features) float64 array
    feature_names : unique column labels, one per feature column
    labels : per-row class, 0 (negative) or 1 (positive)
    provenance : per-row RowProvenance
    """

    features: np.ndarray
    feature_names: tuple[str, ...]
    labels: np.ndarray
    provenance: tuple[RowProvenance, ...]

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64, copy=True)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        names = tuple(self.feature_names)
        prov = tuple(self.provenance)
        if len(names) != feats.shape[1]:
            raise ValueError(
                f"{len(names)} feature names for {feats.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if labels.shape != (feats.shape[0],):
            raise ValueError("labels length must equal the row count")
        if len(prov) != feats.shape[0]:
            raise ValueError("provenance length must equal the row count")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be exactly 0 or 1")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "provenance", prov)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.features[:, self.column_index(name)]

    def select_rows(self, indices) -> "TabularDataset":
        """New dataset holding the given rows, provenance carried through."""
        idx = np.asarray(indices, dtype=np.int64)
        return TabularDataset(
            features=self.features[idx],
            feature_names=self.feature_names,
            labels=self.labels[idx],
            provenance=tuple(self.provenance[i] for i in idx),
        )

    def equals(self, other: "TabularDataset") -> bool:
        """Bit-level equality of features, labels, names, and provenance."""
        return (
            self.feature_names == other.feature_names
            and self.labels.shape == other.labels.shape
            and np.array_equal(self.features, other.features, equal_nan=True)
            and np.array_equal(self.labels, other.labels)
            and self.provenance == other.provenance
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split configuration."""

    test_fraction: float = 0.2
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie strictly between 0 and 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {
            "test_fraction": self.test_fraction,
            "seed": self.seed,
            "stratified": self.stratified,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitSpec":
        return cls(**d)


@dataclass(frozen=True)
class StandardizerParams:
    """Per-column centering/scaling parameters.

    Uses the population (divide-by-n) standard deviation. Columns that are
    constant on the fitting data are recorded with std_dev 0 and passed
    through unscaled when applied.
    """

    columns: tuple[str, ...]
    means: tuple[float, ...]
    std_devs: tuple[float, ...]
    fitted_on: FitScope

    def __post_init__(self):
        if not (len(self.columns) == len(self.means) == len(self.std_devs)):
            raise ValueError("columns, means, and std_devs must align")
        if any(s < 0 for s in self.std_devs):
            raise ValueError("std_dev cannot be negative")


def load_csv(
    path: str | Path,
    schema: tuple[str, ...] | list[str] | None = None,
    label_column: str = LABEL_COLUMN,
) -> TabularDataset:
    """Load a labeled dataset from a headered CSV file.

    The header is resolved by name, so column order does not matter. When
    ``schema`` is given the header must contain exactly that set of names.
    All cells must parse as finite reals; the label column must hold 0/1.

    Raises
    ------
    FileNotFoundError, SchemaError, CsvParseError, ValueError
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty, expected a header row") from None
        header = [h.strip() for h in header]
        if schema is not None:
            expected = set(schema)
            got = set(header)
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            if missing or extra:
                parts = []
                if missing:
                    parts.append(f"missing column(s): {', '.join(missing)}")
                if extra:
                    parts.append(f"unexpected column(s): {', '.join(extra)}")
                raise SchemaError(f"header mismatch in {path}: {'; '.join(parts)}")
        if label_column not in header:
            raise SchemaError(f"{path} has no {label_column!r} column")
        if len(set(header)) != len(header):
            raise SchemaError(f"duplicate column names in {path}")

        label_pos = header.index(label_column)
        feature_names = tuple(h for h in header if h != label_column)
        rows: list[list[float]] = []
        labels: list[int] = []
        for data_row, raw in enumerate(reader, start=1):
            if len(raw) != len(header):
                raise CsvParseError(
                    f"row {data_row}: expected {len(header)} cells, got {len(raw)}",
                    row=data_row,
                    column="",
                )
            try:
                values = [float(c) for c in raw]
            except ValueError:
                values = None
            if values is None or not all(math.isfinite(v) for v in values):
                for col_name, cell in zip(header, raw):
                    try:
                        v = float(cell)
                    except ValueError:
                        raise CsvParseError(
                            f"row {data_row}, column {col_name!r}: "
                            f"cannot parse {cell!r} as a number",
                            row=data_row,
                            column=col_name,
                        ) from None
                    if not math.isfinite(v):
                        raise CsvParseError(
                            f"row {data_row}, column {col_name!r}: "
                            f"non-finite value {cell!r}",
                            row=data_row,
                            column=col_name,
                        )
            label = values.pop(label_pos)
            if label not in (0.0, 1.0):
                raise ValueError(
                    f"row {data_row}: label {label!r} outside {{0, 1}}"
                )
            rows.append(values)
            labels.append(int(label))

    n = len(rows)
    features = (
        np.array(rows, dtype=np.float64)
        if n
        else np.empty((0, len(feature_names)), dtype=np.float64)
    )
    return TabularDataset(
        features=features,
        feature_names=feature_names,
        labels=np.array(labels, dtype=np.int64),
        provenance=tuple(RowProvenance.original(i) for i in range(n)),
    )


def save_csv(dataset: TabularDataset, path: str | Path, label_column: str = LABEL_COLUMN) -> None:
    """Write a dataset as CSV, features first and the label column last.

    Floats are written with repr so a reload is bit-identical.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(dataset.feature_names) + [label_column])
        for i in range(dataset.n_rows):
            writer.writerow(
                [repr(v) for v in dataset.features[i].tolist()] + [int(dataset.labels[i])]
            )


def generate_synthetic_imbalanced(
    n_rows: int,
    positive_fraction: float,
    n_features: int,
    class_separation: float,
    seed: int,
) -> TabularDataset:
    """Generate a two-class Gaussian dataset with a rare positive class.

    Negatives are standard normal; positives are normal with every
    coordinate shifted by ``class_separation``. The positive count is
    round-half-up of ``n_rows * positive_fraction``. Row order is a seeded
    permutation, deterministic for a fixed seed.
    """
    if n_rows < 2:
        raise ValueError("n_rows must be at least 2")
    if not 0.0 < positive_fraction < 1.0:
        raise ValueError("positive_fraction must lie strictly between 0 and 1")
    if n_features < 1:
        raise ValueError("n_features must be at least 1")
    if class_separation < 0:
        raise ValueError("class_separation cannot be negative")
    n_pos = round_half_up(n_rows * positive_fraction)
    if not 1 <= n_pos <= n_rows - 1:
        raise ValueError(
            f"positive_fraction {positive_fraction} yields {n_pos} positives "
            f"out of {n_rows} rows; need at least one row of each class"
        )
    rng = np.random.default_rng(seed)
    n_neg = n_rows - n_pos
    negatives = rng.standard_normal((n_neg, n_features))
    positives = rng.standard_normal((n_pos, n_features)) + class_separation
    features = np.vstack([negatives, positives])
    labels = np.concatenate(
        [np.zeros(n_neg, dtype=np.int64), np.ones(n_pos, dtype=np.int64)]
    )
    order = rng.permutation(n_rows)
    return TabularDataset(
        features=features[order],
        feature_names=tuple(f"f{i + 1}" for i in range(n_features)),
        labels=labels[order],
        provenance=tuple(RowProvenance.original(i) for i in range(n_rows)),
    )


def stratified_split(
    dataset: TabularDataset, spec: SplitSpec
) -> tuple[TabularDataset, TabularDataset]:
    """Partition rows into train and test sets.

    Stratified mode shuffles each class independently and moves
    round-half-up(class count * test_fraction) rows to the test side; both
    sides must end up with at least one row of every class present.
    Unstratified mode shuffles all rows together. Deterministic per seed.
    """
    if dataset.n_rows == 0:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)
    test_idx: list[np.ndarray] = []
    if spec.stratified:
        for cls in (0, 1):
            cls_idx = np.flatnonzero(dataset.labels == cls)
            if cls_idx.size == 0:
                raise ValueError(
                    f"stratified split needs at least one row of class {cls}"
                )
            n_test = round_half_up(cls_idx.size * spec.test_fraction)
            if not 1 <= n_test <= cls_idx.size - 1:
                raise ValueError(
                    f"class {cls} has {cls_idx.size} row(s); test_fraction "
                    f"{spec.test_fraction} leaves one side without that class"
                )
            shuffled = rng.permutation(cls_idx)
            test_idx.append(shuffled[:n_test])
    else:
        n_test = round_half_up(dataset.n_rows * spec.test_fraction)
        if not 1 <= n_test <= dataset.n_rows - 1:
            raise ValueError(
                f"test_fraction {spec.test_fraction} leaves an empty partition"
            )
        shuffled = rng.permutation(dataset.n_rows)
        test_idx.append(shuffled[:n_test])
    test_set = np.sort(np.concatenate(test_idx))
    mask = np.zeros(dataset.n_rows, dtype=bool)
    mask[test_set] = True
    train_set = np.flatnonzero(~mask)
    return dataset.select_rows(train_set), dataset.select_rows(test_set)


def fit_standardizer(
    dataset: TabularDataset,
    columns: list[str] | tuple[str, ...],
    mode: FitScope,
) -> StandardizerParams:
    """Fit per-column mean and population std on the given dataset."""
    if dataset.n_rows == 0:
        raise ValueError("cannot fit a standardizer on an empty dataset")
    means, stds = [], []
    for name in columns:
        values = dataset.column(name)
        means.append(float(values.mean()))
        stds.append(float(values.std(ddof=0)))
    return StandardizerParams(
        columns=tuple(columns),
        means=tuple(means),
        std_devs=tuple(stds),
        fitted_on=mode,
    )


def apply_standardizer(
    dataset: TabularDataset, params: StandardizerParams
) -> TabularDataset:
    """Center and scale the fitted columns in place (same column names).

    Columns recorded with std_dev 0 pass through unchanged.
    """
    missing = [c for c in params.columns if c not in dataset.feature_names]
    if missing:
        raise KeyError(
            f"standardizer columns not in dataset: {', '.join(missing)}"
        )
    features = dataset.features.copy()
    for name, mean, std in zip(params.columns, params.means, params.std_devs):
        j = dataset.column_index(name)
        if std > 0:
            features[:, j] = (features[:, j] - mean) / std
    return TabularDataset(
        features=features,
        feature_names=dataset.feature_names,
        labels=dataset.labels,
        provenance=dataset.provenance,
    )


def _day_segment(hour: float) -> str:
    if 6 <= hour < 12:
        return "Morning"
    elif 12 <= hour < 18:
        return "Afternoon"
    elif 18 <= hour < 24:
        return "Evening"
    else:
        return "Night"


# First category dropped alphabetically, so Afternoon has no column.
_SEGMENT_COLUMNS = ("Day_Segment_Evening", "Day_Segment_Morning", "Day_Segment_Night")


def engineer_time_features(
    dataset: TabularDataset,
    mode: HourMode,
    standardizer: StandardizerParams | None = None,
) -> TabularDataset:
    """Derive hour-of-day features from a raw elapsed-seconds Time column.

    Adds Hour = floor(Time / 3600) and one-hot day-segment columns
    (Morning [6,12), Afternoon [12,18), Evening [18,24), Night otherwise;
    the alphabetically first segment, Afternoon, is dropped). Under
    PAPER_FAITHFUL the raw hour feeds the segmentation so hours >= 24 land
    in Night; CORRECTED wraps hour mod 24 first.

    When ``standardizer`` covers Time and/or Amount, scaled copies named
    ``<column>_Scaled`` are appended and the raw columns dropped, which is
    the preprocessing shape the rest of the pipeline expects.
    """
    if "Time" not in dataset.feature_names:
        raise KeyError("dataset has no Time column")
    time_seconds = dataset.column("Time")
    hour = np.floor(time_seconds / 3600.0)
    segment_hour = np.mod(hour, 24) if mode == HourMode.CORRECTED else hour

    new_names = list(dataset.feature_names)
    new_cols = [dataset.features[:, j] for j in range(dataset.n_features)]

    new_names.append("Hour")
    new_cols.append(hour)
    segments = [_day_segment(h) for h in segment_hour]
    for seg_col in _SEGMENT_COLUMNS:
        seg_name = seg_col.removeprefix("Day_Segment_")
        new_cols.append(
            np.array([1.0 if s == seg_name else 0.0 for s in segments])
        )
        new_names.append(seg_col)

    if standardizer is not None:
        missing = [c for c in standardizer.columns if c not in dataset.feature_names]
        if missing:
            raise KeyError(
                f"standardizer columns not in dataset: {', '.join(missing)}"
            )
        for name, mean, std in zip(
            standardizer.columns, standardizer.means, standardizer.std_devs
        ):
            raw = dataset.column(name)
            scaled = (raw - mean) / std if std > 0 else raw.copy()
            new_names.append(f"{name}_Scaled")
            new_cols.append(scaled)
        # Raw columns are dropped only once their scaled versions exist.
        keep = [i for i, n in enumerate(new_names) if n not in standardizer.columns]
        new_names = [new_names[i] for i in keep]
        new_cols = [new_cols[i] for i in keep]

    return TabularDataset(
        features=np.column_stack(new_cols),
        feature_names=tuple(new_names),
        labels=dataset.labels,
        provenance=dataset.provenance,
    )


def class_distribution(dataset: TabularDataset) -> tuple[dict[int, int], float]:
    """Per-class row counts and the minority-class fraction."""
    if dataset.n_rows == 0:
        raise ValueError("empty dataset has no class distribution")
    counts = {
        0: int((dataset.labels == 0).sum()),
        1: int((dataset.labels == 1).sum()),
    }
    minority_fraction = min(counts.values()) / dataset.n_rows
    return counts, minority_fraction


def amount_summary_by_class(
    dataset: TabularDataset, column: str
) -> dict[int, dict[str, float]]:
    """Five-number summary (min, Q1, median, Q3, max) of a column per class."""
    if dataset.n_rows == 0:
        raise ValueError("empty dataset has no summary")
    values = dataset.column(column)
    out: dict[int, dict[str, float]] = {}
    for cls in (0, 1):
        cls_values = values[dataset.labels == cls]
        if cls_values.size == 0:
            continue
        q = np.percentile(cls_values, [0, 25, 50, 75, 100])
        out[cls] = {
            "min": float(q[0]),
            "q1": float(q[1]),
            "median": float(q[2]),
            "q3": float(q[3]),
            "max": float(q[4]),
        }
    return out


def correlation_matrix(
    dataset: TabularDataset,
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Pearson correlation matrix of the feature columns.

    Returns the symmetric matrix (unit diagonal) and the names of constant
    columns, whose off-diagonal correlations are 0 by convention.
    """
    if dataset.n_rows < 2:
        raise ValueError("correlation needs at least 2 rows")
    X = dataset.features
    centered = X - X.mean(axis=0)
    std = X.std(axis=0, ddof=0)
    cov = centered.T @ centered / X.shape[0]
    denom = np.outer(std, std)
    matrix = np.zeros_like(cov)
    ok = denom > 0
    matrix[ok] = cov[ok] / denom[ok]
    np.fill_diagonal(matrix, 1.0)
    constant = tuple(
        name for name, s in zip(dataset.feature_names, std) if s == 0
    )
    return matrix, constant
