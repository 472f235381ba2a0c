"""Dataset ingestion (libsvm text, numeric CSV) and seeded synthetic generation."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import DesignMatrix


class DataError(Exception):
    """Malformed or unusable input data."""


@dataclass
class Dataset:
    X: DesignMatrix
    y: np.ndarray
    feature_names: list | None = None
    source: str = ""

    @property
    def n(self):
        return self.X.n_rows

    @property
    def p(self):
        return self.X.n_cols


def _check_finite(y, X_values, source):
    if not np.all(np.isfinite(y)):
        raise DataError(f"{source}: target contains NaN or Inf")
    if not np.all(np.isfinite(X_values)):
        raise DataError(f"{source}: matrix contains NaN or Inf")


def load_libsvm(path, n_features=None):
    """Parse `label idx:val ...` lines into a sparse CSC dataset.

    Indices are 1-based in the file; out-of-order indices are accepted and
    sorted, duplicates within a line are rejected.
    """
    labels = []
    rows = []
    cols = []
    vals = []
    max_col = -1
    n_lines = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad label {parts[0]!r}") from exc
            seen = set()
            for tok in parts[1:]:
                if ":" not in tok:
                    raise DataError(f"{path}:{lineno}: malformed feature {tok!r}")
                idx_s, val_s = tok.split(":", 1)
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: malformed feature {tok!r}") from exc
                if idx < 1:
                    raise DataError(f"{path}:{lineno}: indices are 1-based, got {idx}")
                if idx in seen:
                    raise DataError(f"{path}:{lineno}: duplicate index {idx}")
                seen.add(idx)
                rows.append(n_lines)
                cols.append(idx - 1)
                vals.append(val)
                max_col = max(max_col, idx - 1)
            labels.append(label)
            n_lines += 1
    if n_lines == 0:
        raise DataError(f"{path}: empty file")
    p = n_features if n_features is not None else max_col + 1
    if p <= 0:
        raise DataError(f"{path}: no features found")
    mat = sp.csc_matrix(
        (np.asarray(vals), (np.asarray(rows), np.asarray(cols))), shape=(n_lines, p)
    )
    y = np.asarray(labels)
    _check_finite(y, mat.data, str(path))
    return Dataset(X=DesignMatrix(mat), y=y, source=f"{path} (libsvm)")


def write_libsvm(dataset, path):
    """Inverse of load_libsvm; values are written with full float precision."""
    X = dataset.X
    mat = X._sparse if X.is_sparse else sp.csc_matrix(X.toarray())
    csr = mat.tocsr()
    with open(path, "w") as fh:
        for i in range(csr.shape[0]):
            s, e = csr.indptr[i], csr.indptr[i + 1]
            feats = " ".join(
                f"{j + 1}:{v:.17g}" for j, v in zip(csr.indices[s:e], csr.data[s:e])
            )
            label = f"{dataset.y[i]:.17g}"
            fh.write(f"{label} {feats}".rstrip() + "\n")


def load_csv(path, target_column):
    """Rectangular numeric CSV with a header; the target column becomes y."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise DataError(f"{path}: target column {target_column!r} not in header")
        t_idx = header.index(target_column)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric cell") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows)
    y = arr[:, t_idx]
    X = np.delete(arr, t_idx, axis=1)
    names = [h for i, h in enumerate(header) if i != t_idx]
    _check_finite(y, X, str(path))
    return Dataset(X=DesignMatrix(X), y=y, feature_names=names, source=f"{path} (csv)")


def make_synthetic(n, p, k_true, snr, seed):
    """Unit-column Gaussian design with a k_true-sparse +/-1 signal at the given SNR.

    Fully determined by the seed; snr = inf gives noiseless observations and
    k_true = 0 gives pure-noise observations.
    """
    if k_true > p:
        raise ValueError("k_true must not exceed p")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0] = 1.0
    X /= norms
    beta = np.zeros(p)
    if k_true > 0:
        support = rng.choice(p, size=k_true, replace=False)
        beta[support] = rng.choice([-1.0, 1.0], size=k_true)
    signal = X @ beta
    noise = rng.standard_normal(n)
    if k_true == 0:
        y = noise
    elif np.isinf(snr):
        y = signal
    else:
        if snr <= 0:
            raise ValueError("snr must be positive")
        scale = np.linalg.norm(signal) / (snr * np.linalg.norm(noise))
        y = signal + scale * noise
    return Dataset(
        X=DesignMatrix(X), y=y,
        source=f"synthetic(n={n},p={p},k={k_true},snr={snr},seed={seed})",
    )


def make_two_class(n, p, seed, separation=1.0):
    """Two Gaussian clouds with +/-1 labels, for the SVM sample-screening path."""
    rng = np.random.default_rng(seed)
    half = n // 2
    labels = np.concatenate([np.ones(half), -np.ones(n - half)])
    centers = separation * np.outer(labels, rng.standard_normal(p) / np.sqrt(p))
    X = centers + rng.standard_normal((n, p))
    return X, labels
