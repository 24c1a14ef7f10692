"""Categorical datasets and their CSV format.

The file contract: a header line ``var_0,...,var_{N-1}``, a second line of
per-variable cardinalities, then one row of 0-based integer values per
sample. All variables must share one cardinality (mixed cardinalities are
rejected at ingestion so no untested code path can be reached silently).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, ShapeError


@dataclass
class Dataset:
    cardinalities: tuple
    rows: np.ndarray                      # (n_rows, n_vars) int64
    splits: dict = field(default_factory=dict)

    def __post_init__(self):
        cards = tuple(int(c) for c in self.cardinalities)
        rows = np.ascontiguousarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != len(cards):
            raise ShapeError("rows must be (n, n_vars)")
        if any(c < 2 for c in cards):
            raise ShapeError("cardinalities must be >= 2")
        if len(set(cards)) > 1:
            raise ShapeError("mixed cardinalities are not supported; "
                             "all variables must share one cardinality")
        if rows.size and (rows.min() < 0 or np.any(rows >= np.array(cards))):
            raise ShapeError("row values must lie in [0, cardinality)")
        seen = set()
        for name, idx in self.splits.items():
            idx = np.asarray(idx, dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= rows.shape[0]):
                raise ShapeError(f"split {name!r} index out of range")
            dup = seen.intersection(idx.tolist())
            if dup:
                raise ShapeError(f"split {name!r} overlaps another split")
            seen.update(idx.tolist())
            self.splits[name] = idx
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "rows", rows)

    @property
    def n_vars(self):
        return len(self.cardinalities)

    @property
    def n_rows(self):
        return self.rows.shape[0]

    @property
    def phys_dim(self):
        return self.cardinalities[0]

    def split_rows(self, name):
        if name not in self.splits:
            raise ShapeError(f"no split named {name!r}")
        return self.rows[self.splits[name]]

    def with_contiguous_splits(self, sizes):
        """Assign train/valid/test splits of the given sizes, in row order."""
        names = ("train", "valid", "test")
        sizes = [int(s) for s in sizes]
        if len(sizes) > 3 or sum(sizes) > self.n_rows:
            raise ShapeError("split sizes exceed the dataset")
        splits, start = {}, 0
        for name, size in zip(names, sizes):
            if size > 0:
                splits[name] = np.arange(start, start + size)
            start += size
        return Dataset(self.cardinalities, self.rows, splits)


def load_csv(path):
    """Parse the dataset CSV contract, reporting 1-based line numbers."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2:
        raise DataFormatError(1, "file needs a header and a cardinality line")
    header = lines[0].split(",")
    n = len(header)
    for i, name in enumerate(header):
        if name.strip() != f"var_{i}":
            raise DataFormatError(1, f"column {i} must be named var_{i}, "
                                     f"got {name.strip()!r}")
    cards = _int_row(lines[1], 2, n)
    for i, c in enumerate(cards):
        if c < 2:
            raise DataFormatError(2, f"cardinality of var_{i} must be >= 2")
    if len(set(cards)) > 1:
        raise DataFormatError(2, "mixed cardinalities are not supported; "
                                 "all variables must share one cardinality")
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        vals = _int_row(line, lineno, n)
        for i, v in enumerate(vals):
            if not 0 <= v < cards[i]:
                raise DataFormatError(
                    lineno, f"value {v} of var_{i} outside [0, {cards[i]})")
        rows.append(vals)
    arr = (np.array(rows, dtype=np.int64) if rows
           else np.zeros((0, n), dtype=np.int64))
    return Dataset(tuple(cards), arr)


def _int_row(line, lineno, n):
    parts = line.split(",")
    if len(parts) != n:
        raise DataFormatError(lineno, f"expected {n} comma-separated values, "
                                      f"got {len(parts)}")
    out = []
    for i, p in enumerate(parts):
        try:
            out.append(int(p.strip()))
        except ValueError:
            raise DataFormatError(
                lineno, f"column {i}: {p.strip()!r} is not an integer"
            ) from None
    return out


def write_csv(dataset, path):
    with open(path, "w") as fh:
        fh.write(",".join(f"var_{i}" for i in range(dataset.n_vars)) + "\n")
        fh.write(",".join(str(c) for c in dataset.cardinalities) + "\n")
        for row in dataset.rows:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def dataset_from_rows(rows, cardinality):
    rows = np.asarray(rows, dtype=np.int64)
    return Dataset((int(cardinality),) * rows.shape[1], rows)
