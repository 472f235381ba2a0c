"""Numba inner loops for cyclic (block) coordinate descent and the SVM dual ascent.

Kernels mutate beta / residual caches in place and skip inactive or zero-norm
groups; all penalty prox maps are inlined behind an integer dispatch code
(see penalties.KIND_*). Group layout comes flattened: gflat holds column
indices group by group, goff the per-group offsets.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _st(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True, inline="always")
def _prox_scalar(v, step, kind, lam, en_alpha, lo, hi):
    if kind == 0 or kind == 2:  # l1, or a singleton group-l2 block
        return _st(v, lam * step)
    if kind == 1:
        return _st(v, lam * step) / (1.0 + lam * en_alpha * step)
    if kind == 3:
        return v if v > 0.0 else 0.0
    # box
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


@njit(cache=True)
def cd_pass_dense(Xd, resid, beta, gflat, goff, active, gnorm_sq,
                  kind, lam, en_alpha, lo, hi):
    n = resid.shape[0]
    n_groups = goff.shape[0] - 1
    for g in range(n_groups):
        if not active[g]:
            continue
        nsq = gnorm_sq[g]
        if nsq <= 0.0:
            continue
        step = 1.0 / nsq
        s = goff[g]
        e = goff[g + 1]
        if e - s == 1:
            j = gflat[s]
            dot = 0.0
            for i in range(n):
                dot += Xd[i, j] * resid[i]
            u = _prox_scalar(beta[j] + step * dot, step, kind, lam, en_alpha, lo, hi)
            d = u - beta[j]
            if d != 0.0:
                beta[j] = u
                for i in range(n):
                    resid[i] -= d * Xd[i, j]
        else:
            m = e - s
            v = np.empty(m)
            for t in range(m):
                j = gflat[s + t]
                dot = 0.0
                for i in range(n):
                    dot += Xd[i, j] * resid[i]
                v[t] = beta[j] + step * dot
            if kind == 2:
                nv = 0.0
                for t in range(m):
                    nv += v[t] * v[t]
                nv = np.sqrt(nv)
                thr = lam * step
                scale = 0.0 if nv <= thr else 1.0 - thr / nv
                for t in range(m):
                    v[t] *= scale
            else:
                for t in range(m):
                    v[t] = _prox_scalar(v[t], step, kind, lam, en_alpha, lo, hi)
            for t in range(m):
                j = gflat[s + t]
                d = v[t] - beta[j]
                if d != 0.0:
                    beta[j] = v[t]
                    for i in range(n):
                        resid[i] -= d * Xd[i, j]


@njit(cache=True)
def cd_pass_sparse(data, indices, indptr, resid, beta, gflat, goff, active,
                   gnorm_sq, kind, lam, en_alpha, lo, hi):
    n_groups = goff.shape[0] - 1
    for g in range(n_groups):
        if not active[g]:
            continue
        nsq = gnorm_sq[g]
        if nsq <= 0.0:
            continue
        step = 1.0 / nsq
        s = goff[g]
        e = goff[g + 1]
        if e - s == 1:
            j = gflat[s]
            dot = 0.0
            for q in range(indptr[j], indptr[j + 1]):
                dot += data[q] * resid[indices[q]]
            u = _prox_scalar(beta[j] + step * dot, step, kind, lam, en_alpha, lo, hi)
            d = u - beta[j]
            if d != 0.0:
                beta[j] = u
                for q in range(indptr[j], indptr[j + 1]):
                    resid[indices[q]] -= d * data[q]
        else:
            m = e - s
            v = np.empty(m)
            for t in range(m):
                j = gflat[s + t]
                dot = 0.0
                for q in range(indptr[j], indptr[j + 1]):
                    dot += data[q] * resid[indices[q]]
                v[t] = beta[j] + step * dot
            if kind == 2:
                nv = 0.0
                for t in range(m):
                    nv += v[t] * v[t]
                nv = np.sqrt(nv)
                thr = lam * step
                scale = 0.0 if nv <= thr else 1.0 - thr / nv
                for t in range(m):
                    v[t] *= scale
            else:
                for t in range(m):
                    v[t] = _prox_scalar(v[t], step, kind, lam, en_alpha, lo, hi)
            for t in range(m):
                j = gflat[s + t]
                d = v[t] - beta[j]
                if d != 0.0:
                    beta[j] = v[t]
                    for q in range(indptr[j], indptr[j + 1]):
                        resid[indices[q]] -= d * data[q]


@njit(cache=True)
def svm_dual_pass(Xd, ylab, gamma, w, lam, active, row_norm_sq):
    n, p = Xd.shape
    for i in range(n):
        if not active[i]:
            continue
        rsq = row_norm_sq[i]
        if rsq <= 0.0:
            continue
        margin = 0.0
        for t in range(p):
            margin += Xd[i, t] * w[t]
        g_new = gamma[i] + lam * (1.0 - ylab[i] * margin) / rsq
        if g_new < 0.0:
            g_new = 0.0
        elif g_new > 1.0:
            g_new = 1.0
        d = g_new - gamma[i]
        if d != 0.0:
            gamma[i] = g_new
            c = d * ylab[i] / lam
            for t in range(p):
                w[t] += c * Xd[i, t]
