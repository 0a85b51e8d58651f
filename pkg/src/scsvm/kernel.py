"""RBF kernel and the incrementally grown Gram matrix over the active sample."""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.spatial.distance import cdist

DEFAULT_CAP = 20_000


class KernelCapError(RuntimeError):
    """The active set would exceed the configured dense-storage cap."""


def rbf(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2) for two feature vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    diff = x - y
    return float(np.exp(-gamma * np.dot(diff, diff)))


def rbf_matrix(A, B, gamma: float) -> np.ndarray:
    """Pairwise RBF values between the rows of ``A`` and ``B``.

    Each squared distance is an independent per-pair sum of squared
    differences, so entries do not depend on how the rows are batched.
    The diagonal of ``rbf_matrix(A, A)`` is exactly 1.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((A.shape[0], B.shape[0]))
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


def default_gamma(features) -> float:
    """1 / (p * var(X)); falls back to 1 / p for constant data."""
    X = np.asarray(features, dtype=np.float64)
    p = X.shape[1]
    var = float(X.var())
    return 1.0 / (p * var) if var > 0 else 1.0 / p


class GrowingKernel:
    """Gram matrix over an append-only list of active dataset rows.

    ``kernel_fn(A, B)`` may replace the RBF for experimentation; it must
    return the pairwise matrix between two row blocks.

    With ``track_rows=True`` the kernel also keeps the block between every
    feature row and the active set, grown one column batch per extension, so
    :meth:`cross_rows` becomes a row selection. Entries are identical to the
    ones computed on demand.
    """

    def __init__(self, features, gamma: float, cap: int = DEFAULT_CAP,
                 kernel_fn: Optional[Callable] = None, track_rows: bool = False):
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.features = np.asarray(features, dtype=np.float64)
        self.gamma = float(gamma)
        self.cap = int(cap)
        self._kernel_fn = kernel_fn
        self._active: list[int] = []
        self._members: set[int] = set()
        self._gram = np.zeros((0, 0))
        self._tracked = np.zeros((self.features.shape[0], 0)) if track_rows else None

    def _pairs(self, rows_a, rows_b) -> np.ndarray:
        A = self.features[rows_a]
        B = self.features[rows_b]
        if self._kernel_fn is not None:
            return np.asarray(self._kernel_fn(A, B), dtype=np.float64)
        return rbf_matrix(A, B, self.gamma)

    @property
    def active(self) -> np.ndarray:
        return np.array(self._active, dtype=np.int64)

    @property
    def gram(self) -> np.ndarray:
        view = self._gram.view()
        view.flags.writeable = False
        return view

    @property
    def size(self) -> int:
        return len(self._active)

    def __len__(self):
        return len(self._active)

    def extend(self, new_indices) -> "GrowingKernel":
        """Append rows/columns for ``new_indices``; existing entries are untouched."""
        new = [int(i) for i in np.asarray(new_indices, dtype=np.int64).ravel()]
        if not new:
            return self
        if len(set(new)) != len(new) or self._members.intersection(new):
            raise ValueError("duplicate index in kernel extension")
        n_rows = self.features.shape[0]
        if min(new) < 0 or max(new) >= n_rows:
            raise IndexError(f"index out of range for {n_rows} rows")
        if len(self._active) + len(new) > self.cap:
            raise KernelCapError(
                f"active set of {len(self._active) + len(new)} exceeds cap {self.cap}")
        n, k = len(self._active), len(new)
        gram = np.empty((n + k, n + k))
        gram[:n, :n] = self._gram
        if self._tracked is not None:
            cols = self._pairs(np.arange(n_rows), new)
            self._tracked = np.hstack([self._tracked, cols])
            gram[:n, n:] = cols[self._active]
            gram[n:, :n] = gram[:n, n:].T
            gram[n:, n:] = cols[new]
        else:
            if n:
                cross = self._pairs(new, self._active)
                gram[n:, :n] = cross
                gram[:n, n:] = cross.T
            gram[n:, n:] = self._pairs(new, new)
        self._gram = gram
        self._active.extend(new)
        self._members.update(new)
        return self

    def cross_rows(self, query_indices, features=None) -> np.ndarray:
        """Kernel values between query rows and the active set, ``|query| x |S|``.

        ``features`` selects another point set (e.g. a test split) for the
        query side; by default queries index the kernel's own feature matrix.
        """
        src = self.features if features is None else np.asarray(features, dtype=np.float64)
        q = np.asarray(query_indices, dtype=np.int64).ravel()
        if q.size and (q.min() < 0 or q.max() >= src.shape[0]):
            raise IndexError(f"query index out of range for {src.shape[0]} rows")
        if features is None and self._tracked is not None:
            return self._tracked[q]
        A = src[q]
        B = self.features[self._active]
        if self._kernel_fn is not None:
            return np.asarray(self._kernel_fn(A, B), dtype=np.float64)
        return rbf_matrix(A, B, self.gamma) if len(B) else np.zeros((len(q), 0))

    def dump(self, path) -> None:
        """Binary dump: uint64 dimension, float64 gamma, row-major float64 entries,
        all little-endian."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<Qd", self.size, self.gamma))
            fh.write(np.ascontiguousarray(self._gram, dtype="<f8").tobytes())


def load_dump(path):
    """Read a :meth:`GrowingKernel.dump` file back as ``(gram, gamma)``."""
    raw = Path(path).read_bytes()
    n, gamma = struct.unpack_from("<Qd", raw)
    gram = np.frombuffer(raw, dtype="<f8", offset=16).reshape(n, n)
    return gram.astype(np.float64), gamma
