"""Hot numeric kernels: Gaussian-score log marginal likelihoods and k-NN loops.

Two interchangeable backends live here.  The numba backend compiles the inner
loops with ``@njit``; the fallback backend is vectorized numpy.  Selection
happens once at import time: numba is used when it is importable and the
environment variable ``TRADECAUSE_NO_NUMBA`` is unset (or set to ``0``).
``USING_NUMBA`` reports which backend is active.  Both backends are always
importable by name (``*_np`` / ``*_nb``) so tests and the benchmark can
compare them directly.
"""

from __future__ import annotations

import math
import os

import numpy as np

_LOG_PI = math.log(math.pi)

_flag = os.environ.get("TRADECAUSE_NO_NUMBA", "").strip().lower()
_NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}

if not _NUMBA_DISABLED:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False

USING_NUMBA = _HAVE_NUMBA


# ---------------------------------------------------------------------------
# pure-numpy backend
# ---------------------------------------------------------------------------

def mvlgamma(a: float, d: int) -> float:
    """Log of the d-dimensional multivariate gamma function at a."""
    out = 0.25 * d * (d - 1) * _LOG_PI
    for j in range(1, d + 1):
        out += math.lgamma(a + 0.5 * (1 - j))
    return out


def bge_subset_logml_np(r_mat, idx, n, m, alpha_mu, alpha_w, log_t):
    """Log marginal likelihood of the data restricted to the columns ``idx``.

    ``r_mat`` is the posterior scale matrix (prior scale + scatter + mean
    correction) over all M columns; the empty subset scores 0.
    """
    s = len(idx)
    if s == 0:
        return 0.0
    sub = r_mat[np.ix_(idx, idx)]
    sign, logdet = np.linalg.slogdet(sub)
    if sign <= 0 or not np.isfinite(logdet):
        return math.nan
    aw = alpha_w - m + s
    return (
        -0.5 * n * s * _LOG_PI
        + 0.5 * s * (math.log(alpha_mu) - math.log(n + alpha_mu))
        + mvlgamma(0.5 * (n + aw), s)
        - mvlgamma(0.5 * aw, s)
        + 0.5 * aw * s * log_t
        - 0.5 * (n + aw) * logdet
    )


def bge_local_score_np(r_mat, node, parents, n, m, alpha_mu, alpha_w, log_t):
    """Decomposable local score: logml(parents + node) - logml(parents)."""
    joint = np.empty(len(parents) + 1, dtype=np.int64)
    joint[: len(parents)] = parents
    joint[-1] = node
    top = bge_subset_logml_np(r_mat, joint, n, m, alpha_mu, alpha_w, log_t)
    bottom = bge_subset_logml_np(r_mat, np.asarray(parents, dtype=np.int64),
                                 n, m, alpha_mu, alpha_w, log_t)
    return top - bottom


def knn_mean_neighbor_values_np(feats, values, k):
    """Per row, the mean of ``values`` over its k nearest other rows.

    Euclidean distance on ``feats``; distance ties broken by row index.
    """
    n = feats.shape[0]
    diffs = feats[:, None, :] - feats[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diffs, diffs)
    np.fill_diagonal(d2, np.inf)
    out = np.empty(n)
    row_idx = np.arange(n)
    for i in range(n):
        order = np.lexsort((row_idx, d2[i]))
        out[i] = values[order[:k]].mean()
    return out


def knn_regress_np(train_x, train_y, test_x, k):
    """k-NN regression: mean train response over the k nearest train rows."""
    d2 = (
        (test_x**2).sum(axis=1)[:, None]
        - 2.0 * test_x @ train_x.T
        + (train_x**2).sum(axis=1)[None, :]
    )
    n_train = train_x.shape[0]
    train_idx = np.arange(n_train)
    preds = np.empty(test_x.shape[0])
    for i in range(test_x.shape[0]):
        order = np.lexsort((train_idx, d2[i]))
        preds[i] = train_y[order[:k]].mean()
    return preds


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _logdet_chol(a):
        # in-place Cholesky on a small copy; nan signals a non-PD matrix
        s = a.shape[0]
        logdet = 0.0
        for j in range(s):
            d = a[j, j]
            for t in range(j):
                d -= a[j, t] * a[j, t]
            if d <= 0.0:
                return math.nan
            a[j, j] = math.sqrt(d)
            logdet += math.log(d)
            for i in range(j + 1, s):
                v = a[i, j]
                for t in range(j):
                    v -= a[i, t] * a[j, t]
                a[i, j] = v / a[j, j]
        return logdet

    @njit(cache=True)
    def _mvlgamma_nb(a, d):
        out = 0.25 * d * (d - 1) * _LOG_PI
        for j in range(1, d + 1):
            out += math.lgamma(a + 0.5 * (1 - j))
        return out

    @njit(cache=True)
    def _subset_logml_nb(r_mat, idx, n, m, alpha_mu, alpha_w, log_t):
        s = idx.shape[0]
        if s == 0:
            return 0.0
        sub = np.empty((s, s))
        for i in range(s):
            for j in range(s):
                sub[i, j] = r_mat[idx[i], idx[j]]
        logdet = _logdet_chol(sub)
        if math.isnan(logdet):
            return math.nan
        aw = alpha_w - m + s
        return (
            -0.5 * n * s * _LOG_PI
            + 0.5 * s * (math.log(alpha_mu) - math.log(n + alpha_mu))
            + _mvlgamma_nb(0.5 * (n + aw), s)
            - _mvlgamma_nb(0.5 * aw, s)
            + 0.5 * aw * s * log_t
            - 0.5 * (n + aw) * logdet
        )

    @njit(cache=True)
    def bge_local_score_nb(r_mat, node, parents, n, m, alpha_mu, alpha_w, log_t):
        p = parents.shape[0]
        joint = np.empty(p + 1, dtype=np.int64)
        joint[:p] = parents
        joint[p] = node
        top = _subset_logml_nb(r_mat, joint, n, m, alpha_mu, alpha_w, log_t)
        bottom = _subset_logml_nb(r_mat, parents, n, m, alpha_mu, alpha_w, log_t)
        return top - bottom

    @njit(cache=True)
    def knn_mean_neighbor_values_nb(feats, values, k):
        n = feats.shape[0]
        d = feats.shape[1]
        out = np.empty(n)
        best_d = np.empty(k)
        best_j = np.empty(k, dtype=np.int64)
        for i in range(n):
            for t in range(k):
                best_d[t] = np.inf
                best_j[t] = -1
            for j in range(n):
                if j == i:
                    continue
                dist = 0.0
                for c in range(d):
                    diff = feats[i, c] - feats[j, c]
                    dist += diff * diff
                # insert (dist, j) if it beats the current worst slot;
                # (dist, index) lexicographic order makes ties deterministic
                t = k - 1
                if dist > best_d[t] or (dist == best_d[t] and best_j[t] >= 0 and j > best_j[t]):
                    continue
                while t > 0 and (
                    dist < best_d[t - 1]
                    or (dist == best_d[t - 1] and j < best_j[t - 1])
                ):
                    best_d[t] = best_d[t - 1]
                    best_j[t] = best_j[t - 1]
                    t -= 1
                best_d[t] = dist
                best_j[t] = j
            acc = 0.0
            for t in range(k):
                acc += values[best_j[t]]
            out[i] = acc / k
        return out

    @njit(cache=True)
    def knn_regress_nb(train_x, train_y, test_x, k):
        n_train = train_x.shape[0]
        n_test = test_x.shape[0]
        d = train_x.shape[1]
        preds = np.empty(n_test)
        best_d = np.empty(k)
        best_j = np.empty(k, dtype=np.int64)
        for i in range(n_test):
            for t in range(k):
                best_d[t] = np.inf
                best_j[t] = -1
            for j in range(n_train):
                dist = 0.0
                for c in range(d):
                    diff = test_x[i, c] - train_x[j, c]
                    dist += diff * diff
                t = k - 1
                if dist > best_d[t] or (dist == best_d[t] and best_j[t] >= 0 and j > best_j[t]):
                    continue
                while t > 0 and (
                    dist < best_d[t - 1]
                    or (dist == best_d[t - 1] and j < best_j[t - 1])
                ):
                    best_d[t] = best_d[t - 1]
                    best_j[t] = best_j[t - 1]
                    t -= 1
                best_d[t] = dist
                best_j[t] = j
            acc = 0.0
            for t in range(k):
                acc += train_y[best_j[t]]
            preds[i] = acc / k
        return preds


# ---------------------------------------------------------------------------
# active backend
# ---------------------------------------------------------------------------

if USING_NUMBA:
    bge_local_score = bge_local_score_nb
    knn_mean_neighbor_values = knn_mean_neighbor_values_nb
    knn_regress = knn_regress_nb
else:
    bge_local_score = bge_local_score_np
    knn_mean_neighbor_values = knn_mean_neighbor_values_np
    knn_regress = knn_regress_np


def warmup() -> None:
    """Trigger JIT compilation of the active kernels on tiny inputs."""
    r = np.eye(3) * 2.0
    bge_local_score(r, 0, np.asarray([1], dtype=np.int64), 10, 3, 1.0, 5.0, 0.0)
    feats = np.asarray([[0.0], [1.0], [2.0]])
    vals = np.asarray([0.0, 1.0, 0.0])
    knn_mean_neighbor_values(feats, vals, 1)
    knn_regress(feats, vals, feats[:1], 2)
