"""Labeled datasets, train/test splits and seeded sample streams."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Raised for unreadable, malformed or unsupported input data."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with labels in {-1, +1}.

    ``ids`` are stable row indices into the originally loaded file so that
    subsets produced by :func:`split` can be traced back to their source rows.
    """

    features: np.ndarray
    labels: np.ndarray
    ids: np.ndarray
    label_names: tuple = ("-1", "+1")

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        ids = np.asarray(self.ids, dtype=np.int64)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],) or ids.shape != (X.shape[0],):
            raise DataError("features, labels and ids disagree on row count")
        if not np.all(np.isfinite(X)):
            raise DataError("feature matrix contains non-finite entries")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise DataError("labels must be exactly -1 or +1")
        X.flags.writeable = False
        y.flags.writeable = False
        ids.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "ids", ids)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.n_samples

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.features[rows], self.labels[rows], self.ids[rows],
                       self.label_names)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.ids, self.label_names)


# ---------------------------------------------------------------------------
# loading

def _parse_float(text: str, lineno: int, path) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: cannot parse {text!r} as a number") from None
    if not np.isfinite(value):
        raise DataError(f"{path}:{lineno}: non-finite value {text!r}")
    return value


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _label_mapping(raw: Sequence[str], label_map: Optional[dict]) -> dict:
    classes = sorted(set(raw))
    if label_map is not None:
        mapping = {str(k): int(v) for k, v in label_map.items()}
        if sorted(set(mapping.values())) != [-1, 1]:
            raise DataError("label map must send one class to -1 and one to +1")
        unknown = [c for c in classes if c not in mapping]
        if unknown:
            raise DataError(f"labels {unknown} are outside the configured classes "
                            f"{sorted(mapping)}")
        return mapping
    if len(classes) > 2:
        raise DataError(f"expected a binary problem, found {len(classes)} classes: "
                        f"{classes[:10]}")
    if len(classes) < 2:
        raise DataError(f"only one class present: {classes}")
    if all(_is_number(c) for c in classes):
        # numeric labels: "-1"/"+1" and "0"/"1" must map by value, not by text
        classes = sorted(classes, key=float)
    return {classes[0]: -1, classes[1]: 1}


def _read_csv(path: Path, label_column, header, drop_columns):
    with open(path, newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh))
                if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    first = rows[0][1]
    names = None
    if header is None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            header = True
        else:
            # header iff some non-label field of the first row is not numeric
            lab = _resolve_index(label_column, None, len(first))
            header = not all(_is_number(c) for j, c in enumerate(first) if j != lab)
    if header:
        names = [c.strip() for c in first]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")
    arity = len(rows[0][1])
    lab = _resolve_index(label_column, names, arity)
    drop = {_resolve_index(c, names, arity) for c in (drop_columns or ())}
    keep = [j for j in range(arity) if j != lab and j not in drop]
    X = np.empty((len(rows), len(keep)))
    raw = []
    for r, (lineno, fields) in enumerate(rows):
        if len(fields) != arity:
            raise DataError(f"{path}:{lineno}: expected {arity} fields, got {len(fields)}")
        raw.append(fields[lab].strip())
        for c, j in enumerate(keep):
            X[r, c] = _parse_float(fields[j].strip(), lineno, path)
    return X, raw


def _resolve_index(column, names, arity) -> int:
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if names is None or column not in names:
            raise DataError(f"label column {column!r} not found in header")
        return names.index(column)
    idx = int(column)
    if idx < 0:
        idx += arity
    if not 0 <= idx < arity:
        raise DataError(f"column index {column} out of range for {arity} columns")
    return idx


def _read_sparse(path: Path, n_features: Optional[int]):
    raw, entries = [], []
    width = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            raw.append(parts[0])
            row = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                if not sep or not idx.isdigit() or int(idx) < 1:
                    raise DataError(f"{path}:{lineno}: bad index:value pair {tok!r}")
                row[int(idx)] = _parse_float(val, lineno, path)
            width = max(width, max(row, default=0))
            entries.append(row)
    if not entries:
        raise DataError(f"{path}: empty file")
    if n_features is not None:
        if width > n_features:
            raise DataError(f"{path}: feature index {width} exceeds n_features={n_features}")
        width = n_features
    X = np.zeros((len(entries), width))
    for r, row in enumerate(entries):
        for idx, val in row.items():
            X[r, idx - 1] = val
    return X, raw


def load(path: Union[str, Path], format: str = "csv", label_column=-1, *,
         header: Optional[bool] = None, label_map: Optional[dict] = None,
         drop_columns: Sequence = (), n_features: Optional[int] = None,
         subsample: Optional[int] = None, seed: int = 0) -> Dataset:
    """Read a labeled binary dataset.

    Parameters
    ----------
    path : str or Path
        Input file.
    format : {"csv", "sparse"}
        ``csv`` is comma separated with an optional header (auto-detected
        unless ``header`` is given). ``sparse`` is the ``label idx:value``
        format with 1-based indices.
    label_column : int or str
        Label column for csv input (index, negative index or header name).
    label_map : dict, optional
        Raw label text to -1/+1. By default the smaller raw label maps to -1
        (numeric order when all labels are numbers, text order otherwise).
    drop_columns : sequence
        Extra csv columns to ignore, e.g. a row id.
    subsample : int, optional
        Keep a seeded random subset of this many rows (in file order).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    if format == "csv":
        X, raw = _read_csv(path, label_column, header, drop_columns)
    elif format in ("sparse", "sparse-index-value", "libsvm"):
        X, raw = _read_sparse(path, n_features)
    else:
        raise DataError(f"unknown format {format!r}")

    mapping = _label_mapping(raw, label_map)
    y = np.array([mapping[r] for r in raw], dtype=np.float64)
    names = tuple(k for k, _ in sorted(mapping.items(), key=lambda kv: kv[1]))
    data = Dataset(X, y, np.arange(len(y)), names)
    log.info("loaded %s: %d rows, %d features", path, data.n_samples, data.n_features)
    if subsample is not None and subsample < data.n_samples:
        keep = np.sort(np.random.default_rng(seed).choice(data.n_samples, subsample,
                                                          replace=False))
        data = data.subset(keep)
        log.info("subsampled to %d rows", data.n_samples)
    return data


# ---------------------------------------------------------------------------
# splitting and standardization

def split(data: Dataset, test_fraction: float, seed: int):
    """Seeded disjoint train/test partition; the test part gets
    ``round(test_fraction * m)`` rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    m = data.n_samples
    n_test = int(round(test_fraction * m))
    n_test = min(max(n_test, 1), m - 1)
    perm = np.random.default_rng(seed).permutation(m)
    test = np.sort(perm[:n_test])
    train = np.sort(perm[n_test:])
    return data.subset(train), data.subset(test)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data: Dataset) -> "Standardizer":
        X = data.features
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        # constant columns collapse to zero instead of dividing by zero
        scale = np.where(std > 0, std, np.inf)
        return cls(mean, scale)

    def apply(self, data: Dataset) -> Dataset:
        Z = (data.features - self.mean) / self.scale
        return data.with_features(Z)


def standardize(train: Dataset, *others: Dataset):
    """z-score every column using statistics of ``train`` only."""
    st = Standardizer.fit(train)
    return (st.apply(train),) + tuple(st.apply(o) for o in others)


# ---------------------------------------------------------------------------
# sample streams

@dataclass
class SampleStream:
    """Without-replacement stream over a fixed index pool.

    The draw order is a seeded permutation of ``pool`` fixed at construction,
    so two streams with the same seed and pool produce identical draws.
    """

    pool: np.ndarray
    seed: int
    _order: np.ndarray = field(init=False, repr=False)
    _cursor: int = field(init=False, default=0)

    def __post_init__(self):
        self.pool = np.asarray(self.pool, dtype=np.int64)
        self._order = np.random.default_rng(self.seed).permutation(self.pool)

    @property
    def drawn(self) -> np.ndarray:
        return self._order[:self._cursor]

    @property
    def remaining(self) -> np.ndarray:
        return self._order[self._cursor:]

    @property
    def exhausted(self) -> bool:
        return self._cursor >= len(self._order)

    def draw_next(self, count: int) -> np.ndarray:
        """Next ``min(count, remaining)`` indices; empty once the pool is used up."""
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        out = self._order[self._cursor:self._cursor + count]
        self._cursor += len(out)
        return out.copy()


class ValidationSampler:
    """Independent draws of fresh validation index sets.

    Each call returns a new subset of the pool (without replacement inside
    the call) from a generator seeded separately from the training stream.
    """

    def __init__(self, pool, seed: int):
        self.pool = np.asarray(pool, dtype=np.int64)
        self._rng = np.random.default_rng(seed)

    def draw(self, count: int) -> np.ndarray:
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        count = min(count, len(self.pool))
        return self._rng.choice(self.pool, size=count, replace=False)
