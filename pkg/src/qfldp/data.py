"""Synthetic datasets and the feature-CSV format (``f1,...,fd,label``)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class DataFormatError(ValueError):
    """Raised for malformed dataset files; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class Example(NamedTuple):
    features: np.ndarray
    label: int


@dataclass(eq=False)
class Dataset:
    """Feature matrix plus 0/1 labels; iterates as :class:`Example` rows."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError("X must be (n, d) and y must be (n,)")

    def __len__(self):
        return len(self.y)

    def __iter__(self):
        for row, label in zip(self.X, self.y):
            yield Example(row, int(label))

    def __getitem__(self, i):
        return Example(self.X[i], int(self.y[i]))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)

    @property
    def n_features(self):
        return self.X.shape[1]


def generate_synthetic(n, d, separation, rng):
    """Two unit-covariance Gaussian clusters at ``+-(separation / 2) * u``.

    ``u`` is a random unit vector.  Class 0 gets ``ceil(n / 2)`` examples and
    class 1 the rest; rows come out shuffled.
    """
    if n < 2:
        raise ValueError(f"need at least 2 examples, got {n}")
    if d < 4:
        raise ValueError(f"need at least 4 features, got {d}")
    if not separation >= 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    u = rng.normal(size=d)
    u /= np.linalg.norm(u)
    y = np.zeros(n, dtype=int)
    y[math.ceil(n / 2) :] = 1
    y = y[rng.permutation(n)]
    signs = np.where(y == 1, 1.0, -1.0)
    X = rng.normal(size=(n, d)) + signs[:, None] * (separation / 2.0) * u
    return Dataset(X, y)


def write_features_csv(path, dataset):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{j + 1}" for j in range(dataset.n_features)] + ["label"])
        for row, label in zip(dataset.X, dataset.y):
            writer.writerow([format(v, ".17g") for v in row] + [int(label)])


def load_features_csv(path):
    """Read a feature CSV; errors name the offending line."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot open {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError("missing header row", 1)
        if len(header) < 2 or header[-1].strip() != "label":
            raise DataFormatError("header must end with a 'label' column", 1)
        width = len(header)
        rows, labels = [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != width:
                raise DataFormatError(f"expected {width} columns, got {len(row)}", line)
            try:
                feats = [float(v) for v in row[:-1]]
            except ValueError:
                raise DataFormatError("non-numeric feature value", line) from None
            if not all(math.isfinite(v) for v in feats):
                raise DataFormatError("non-finite feature value", line)
            label = row[-1].strip()
            if label not in ("0", "1"):
                raise DataFormatError(f"label must be 0 or 1, got {label!r}", line)
            rows.append(feats)
            labels.append(int(label))
    X = np.array(rows, dtype=float).reshape(len(rows), width - 1)
    return Dataset(X, np.array(labels, dtype=int))
