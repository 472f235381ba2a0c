"""Design-matrix storage and the matrix primitives the solver and screening engine consume.

A :class:`DesignMatrix` wraps either a dense row-major array or a compressed
sparse column matrix and caches per-column Euclidean norms at construction.
Column-oriented storage is deliberate: coordinate descent and screening tests
both consume whole columns. The matrix is immutable after construction and
safe for concurrent reads.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp

POWER_ITER_MAX = 1000
POWER_ITER_TOL = 1e-10


class DegradedAccuracyWarning(UserWarning):
    """Power iteration hit its iteration budget; the returned norm is a best estimate."""


class DesignMatrix:
    """n_rows x n_cols observation matrix, dense or CSC, with cached column norms."""

    def __init__(self, matrix):
        if sp.issparse(matrix):
            mat = sp.csc_matrix(matrix).astype(np.float64)
            mat.sum_duplicates()
            mat.sort_indices()
            self._check_csc(mat)
            self._sparse = mat
            self._dense = None
            sq = np.asarray(mat.multiply(mat).sum(axis=0)).ravel()
            self.col_norms = np.sqrt(sq)
        else:
            arr = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
            if arr.ndim != 2:
                raise ValueError(f"expected a 2-d matrix, got ndim={arr.ndim}")
            self._dense = arr
            self._sparse = None
            self.col_norms = np.linalg.norm(arr, axis=0)
        self.n_rows, self.n_cols = (
            self._sparse.shape if self._sparse is not None else self._dense.shape
        )

    @staticmethod
    def _check_csc(mat):
        indptr, indices = mat.indptr, mat.indices
        if np.any(np.diff(indptr) < 0):
            raise ValueError("CSC column offsets must be nondecreasing")
        for j in range(mat.shape[1]):
            col = indices[indptr[j]:indptr[j + 1]]
            if col.size > 1 and np.any(np.diff(col) <= 0):
                raise ValueError(f"row indices in column {j} must be strictly increasing")

    @property
    def is_sparse(self):
        return self._sparse is not None

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def toarray(self):
        if self._dense is not None:
            return self._dense
        return self._sparse.toarray()

    def matvec(self, beta):
        """X @ beta."""
        beta = np.asarray(beta, dtype=np.float64)
        if beta.shape != (self.n_cols,):
            raise ValueError(f"beta has shape {beta.shape}, expected ({self.n_cols},)")
        if self._dense is not None:
            return self._dense @ beta
        return self._sparse @ beta

    def rmatvec(self, v):
        """X.T @ v."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_rows,):
            raise ValueError(f"v has shape {v.shape}, expected ({self.n_rows},)")
        if self._dense is not None:
            return self._dense.T @ v
        return self._sparse.T @ v

    def columns(self, idx):
        """Submatrix X[:, idx] as a dense array (idx is a group-sized index set)."""
        idx = np.asarray(idx, dtype=np.intp)
        if self._dense is not None:
            return self._dense[:, idx]
        return self._sparse[:, idx].toarray()

    def group_adjoint(self, idx, v):
        """X_g.T @ v for the column subset g."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_rows,):
            raise ValueError(f"v has shape {v.shape}, expected ({self.n_rows},)")
        idx = np.asarray(idx, dtype=np.intp)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_cols):
            raise ValueError("group indices out of range")
        if self._dense is not None:
            return self._dense[:, idx].T @ v
        return np.asarray((self._sparse[:, idx].T @ v)).ravel()


def matvec(X: DesignMatrix, beta):
    return X.matvec(beta)


def group_adjoint(X: DesignMatrix, idx, v):
    return X.group_adjoint(idx, v)


def _power_iteration(matvec_fn, rmatvec_fn, dim, max_iter=POWER_ITER_MAX, tol=POWER_ITER_TOL):
    """Largest singular value of the operator via power iteration on the Gram map.

    Returns (sigma, converged). Deterministic: the start vector is drawn from a
    fixed-seed generator.
    """
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dim)
    nv = np.linalg.norm(v)
    if nv == 0:  # pragma: no cover - zero-probability draw
        v = np.ones(dim)
        nv = np.linalg.norm(v)
    v /= nv
    rayleigh = 0.0
    for _ in range(max_iter):
        w = rmatvec_fn(matvec_fn(v))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0, True
        new_rayleigh = float(v @ w)
        v = w / nw
        if abs(new_rayleigh - rayleigh) <= tol * max(1.0, abs(new_rayleigh)):
            return float(np.sqrt(max(new_rayleigh, 0.0))), True
        rayleigh = new_rayleigh
    return float(np.sqrt(max(rayleigh, 0.0))), False


def spectral_norm(X: DesignMatrix) -> float:
    """Largest singular value of X (power iteration, 1e-8 relative accuracy).

    If the iteration budget is exhausted a DegradedAccuracyWarning is emitted
    and the best estimate is returned.
    """
    sigma, ok = _power_iteration(X.matvec, X.rmatvec, X.n_cols)
    if not ok:
        warnings.warn(
            "power iteration did not converge; spectral norm estimate may be degraded",
            DegradedAccuracyWarning,
        )
    return sigma


class GroupStructure:
    """Ordered partition of the columns into groups, with cached operator norms ``‖X_g‖``."""

    def __init__(self, X: DesignMatrix, indices):
        self.indices = [np.asarray(g, dtype=np.intp) for g in indices]
        self._validate_partition(X.n_cols)
        self.norms = np.array([self._group_norm(X, g) for g in self.indices])
        self.sizes = np.array([g.size for g in self.indices], dtype=np.intp)
        # flattened layout for the CD kernels
        self.flat = (
            np.concatenate(self.indices) if self.indices else np.empty(0, dtype=np.intp)
        )
        self.offsets = np.zeros(len(self.indices) + 1, dtype=np.intp)
        np.cumsum(self.sizes, out=self.offsets[1:])

    def _validate_partition(self, p):
        seen = np.zeros(p, dtype=bool)
        for g in self.indices:
            if g.size == 0:
                raise ValueError("empty group")
            if np.any(g < 0) or np.any(g >= p):
                raise ValueError("group index out of range")
            if np.any(seen[g]):
                raise ValueError("groups must be disjoint")
            seen[g] = True
        if not seen.all():
            raise ValueError("groups must cover every column")

    @staticmethod
    def _group_norm(X, idx):
        # exact SVD: power iteration approaches the norm from below, and an
        # underestimated ||X_g|| would shrink both the Lipschitz step and the
        # screening term r * ||X_g|| in the unsafe direction
        if idx.size == 1:
            return float(X.col_norms[idx[0]])
        sub = X.columns(idx)
        if not np.any(sub):
            return 0.0
        return float(np.linalg.svd(sub, compute_uv=False)[0])

    @classmethod
    def singletons(cls, X: DesignMatrix):
        return cls(X, [np.array([j]) for j in range(X.n_cols)])

    @classmethod
    def contiguous(cls, X: DesignMatrix, size):
        """Blocks of `size` consecutive columns (the last may be shorter)."""
        if size < 1:
            raise ValueError("group size must be >= 1")
        idx = [np.arange(s, min(s + size, X.n_cols)) for s in range(0, X.n_cols, size)]
        return cls(X, idx)

    @property
    def n_groups(self):
        return len(self.indices)

    def group_correlation_norms(self, corr):
        """Per-group Euclidean norm of a p-vector restricted to each group."""
        sq = corr[self.flat] ** 2
        out = np.add.reduceat(sq, self.offsets[:-1])
        return np.sqrt(out)

    def is_singleton(self):
        return bool(np.all(self.sizes == 1))
