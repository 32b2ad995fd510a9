"""Dataset readers, splitting, standardization and synthetic stand-ins."""

from __future__ import annotations

import math

import numpy as np

from ..errors import DataError, ParseError


def parse_libsvm(path, n_features=None):
    """Read LIBSVM text (``label idx:val ...``, 1-based increasing indices).

    Returns a dense ``N x K`` matrix and labels in {-1, +1}; a {1, 2} label
    set (Covertype) maps 2 to -1.
    """
    labels, rows = [], []
    width = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise ParseError(f"bad label {parts[0]!r}", line=lineno) from None
            entries = {}
            last = 0
            for tok in parts[1:]:
                try:
                    idx, val = tok.split(":")
                    idx, val = int(idx), float(val)
                except ValueError:
                    raise ParseError(f"bad feature token {tok!r}", line=lineno) from None
                if idx <= last:
                    raise ParseError("feature indices must be 1-based and strictly increasing", line=lineno)
                entries[idx] = val
                last = idx
            width = max(width, last)
            labels.append(label)
            rows.append(entries)
    k = n_features or width
    if width > k:
        raise ParseError(f"feature index {width} exceeds declared width {k}")
    X = np.zeros((len(rows), k))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            X[i, idx - 1] = val
    return X, _binary_labels(np.array(labels))


def _binary_labels(raw):
    values = set(np.unique(raw).tolist())
    if values <= {-1.0, 1.0}:
        return raw.astype(int)
    if values <= {1.0, 2.0}:
        return np.where(raw == 2, -1, 1)
    if values <= {0.0, 1.0}:
        return np.where(raw == 0, -1, 1)
    raise DataError(f"expected a binary label set, got {sorted(values)}")


def parse_csv_regression(path, target_col=-1, header=False, bias=True):
    """Numeric CSV to ``(X, y)``; ``X`` gets a trailing constant column if ``bias``."""
    rows = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    start = 1 if header else 0
    for lineno, line in enumerate(lines[start:], start + 1):
        if not line.strip():
            continue
        cells = line.split(",")
        row = []
        for col, cell in enumerate(cells, 1):
            try:
                row.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric cell {cell.strip()!r}", line=lineno, column=col) from None
        if rows and len(row) != len(rows[0]):
            raise ParseError("ragged row", line=lineno)
        rows.append(row)
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ParseError("need at least one feature column and a target column")
    y = data[:, target_col]
    X = np.delete(data, target_col % data.shape[1], axis=1)
    if bias:
        X = np.column_stack([X, np.ones(len(X))])
    return X, y


def write_csv(path, X, y, header=None):
    with open(path, "w") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row, target in zip(np.asarray(X), np.asarray(y)):
            fh.write(",".join(repr(float(v)) for v in row) + f",{float(target)!r}\n")


def write_libsvm(path, X, t):
    with open(path, "w") as fh:
        for row, label in zip(np.asarray(X), np.asarray(t)):
            feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(row) if v != 0)
            fh.write(f"{int(label)} {feats}".rstrip() + "\n")


def split_sizes(n, train_frac):
    n_test = math.floor(n * (1.0 - train_frac) + 1e-9)
    return n - n_test, n_test


def split(n, train_frac, rng):
    """Seeded shuffle of ``range(n)`` into disjoint train/test index arrays."""
    n_train, _ = split_sizes(n, train_frac)
    perm = rng.permutation(n)
    return perm[:n_train], perm[n_train:]


def standardize(train, test):
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (train - mean) / std, (test - mean) / std, mean, std


# ---------------------------------------------------------------------------
# synthetic stand-ins for datasets that are not available locally


def covertype_like(n, rng, n_continuous=10, n_binary=44):
    """Covertype-shaped binary classification data.

    Ten correlated continuous features with heterogeneous scales and 44 sparse
    indicator features; labels follow a noisy linear logit so the best linear
    classifier reaches roughly three-quarters accuracy.
    """
    k = n_continuous + n_binary
    mix = rng.normal(size=(n_continuous, n_continuous)) / math.sqrt(n_continuous)
    cont = (rng.normal(size=(n, n_continuous)) @ (np.eye(n_continuous) + mix)) \
        * np.geomspace(1.0, 300.0, n_continuous) + np.linspace(0, 2000, n_continuous)
    wild = rng.integers(0, 4, size=n)
    soil = rng.integers(0, n_binary - 4, size=n)
    binary = np.zeros((n, n_binary))
    binary[np.arange(n), wild] = 1.0
    binary[np.arange(n), 4 + soil] = 1.0
    X = np.column_stack([cont, binary])
    z = (cont - cont.mean(0)) / cont.std(0)
    w_cont = rng.normal(size=n_continuous)
    w_bin = rng.normal(scale=0.8, size=n_binary)
    logit = 0.35 * z @ w_cont + binary @ w_bin
    logit = 2.0 * (logit - logit.mean()) / logit.std()
    t = np.where(rng.random(n) < 1 / (1 + np.exp(-logit)), 1, -1)
    return X[:, :k], t


def sine_regression(n, rng, n_features=13, noise=0.1):
    """``y = sin(3 x_1) + noise * eta`` with ``x ~ U(-1, 1)^K``; only x_1 matters."""
    X = rng.uniform(-1.0, 1.0, size=(n, n_features))
    y = np.sin(3.0 * X[:, 0]) + noise * rng.standard_normal(n)
    return X, y
