"""numba-compiled kernels. Signatures mirror ``coseg._kernels_numpy``.

Split-scan conventions, shared by both backends: a block of ``n`` rows is split
as X = rows ``[0, t)`` and Y = rows ``[t, k)``; both sides need at least
``min_size`` rows. ``pooled`` selects the ``2/(m+n)`` cross-term prefactor
instead of ``2/(mn)``.
"""

import numpy as np
from numba import njit

TIE_RTOL = 1e-10
GINI_ATOL = 1e-10

NAME = "numba"


@njit(cache=True)
def alpha_distances(Z, alpha):
    n, p = Z.shape
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for c in range(p):
                d = Z[i, c] - Z[j, c]
                s += d * d
            v = np.sqrt(s) ** alpha
            D[i, j] = v
            D[j, i] = v
    return D


@njit(cache=True)
def _prefix(D):
    # R[i, j] = sum_{l<j} D[i, l]; w[t] = sum of D over pairs inside [0, t)
    n = D.shape[0]
    R = np.zeros((n, n + 1))
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += D[i, j]
            R[i, j + 1] = acc
    w = np.zeros(n + 1)
    for i in range(n):
        w[i + 1] = w[i] + R[i, i]
    return R, w


@njit(cache=True)
def _stat(B, WX, WY, nx, ny, pooled):
    if pooled:
        cross = 2.0 * B / (nx + ny)
    else:
        cross = 2.0 * B / (nx * ny)
    e = cross - WX / (nx * (nx - 1) / 2.0) - WY / (ny * (ny - 1) / 2.0)
    return nx * ny / (nx + ny) * e


@njit(cache=True)
def _scan(D, min_size, pooled, want_argmax):
    n = D.shape[0]
    m = min_size
    if n < 2 * m:
        return -1, -1, np.nan
    R, w = _prefix(D)
    best = -np.inf
    for t in range(m, n - m + 1):
        B = 0.0
        for j in range(t, t + m - 1):
            B += R[j, t]
        for k in range(t + m, n + 1):
            B += R[k - 1, t]
            q = _stat(B, w[t], w[k] - w[t] - B, float(t), float(k - t), pooled)
            if q > best:
                best = q
    if not want_argmax:
        return -1, -1, best
    # second pass: first (t, k) in lexicographic order within tolerance of the max
    cut = best - TIE_RTOL * max(1.0, abs(best))
    for t in range(m, n - m + 1):
        B = 0.0
        for j in range(t, t + m - 1):
            B += R[j, t]
        for k in range(t + m, n + 1):
            B += R[k - 1, t]
            q = _stat(B, w[t], w[k] - w[t] - B, float(t), float(k - t), pooled)
            if q >= cut:
                return t, k, q
    return -1, -1, best


@njit(cache=True)
def split_scan(D, min_size, pooled):
    return _scan(D, min_size, pooled, True)


@njit(cache=True)
def max_split_stat(D, min_size, pooled):
    return _scan(D, min_size, pooled, False)[2]


@njit(cache=True)
def permutation_max_stats(D, starts, stops, perms, min_size, pooled):
    n_rep = perms.shape[0]
    out = np.empty(n_rep)
    for r in range(n_rep):
        best = -np.inf
        for c in range(starts.shape[0]):
            s = starts[c]
            n = stops[c] - s
            if n < 2 * min_size:
                continue
            block = np.empty((n, n))
            for i in range(n):
                pi = perms[r, s + i]
                for j in range(n):
                    block[i, j] = D[pi, perms[r, s + j]]
            q = _scan(block, min_size, pooled, False)[2]
            if q > best:
                best = q
        out[r] = best
    return out


@njit(cache=True)
def gini_best_split(X, y, idx, features, n_classes, min_leaf):
    n = idx.shape[0]
    nf = features.shape[0]
    total = np.zeros(n_classes)
    for i in range(n):
        total[y[idx[i]]] += 1.0
    scores = np.full((nf, max(n - 1, 0)), np.inf)
    thresholds = np.empty((nf, max(n - 1, 0)))
    left = np.zeros(n_classes)
    vals = np.empty(n)
    best = np.inf
    for a in range(nf):
        f = features[a]
        for i in range(n):
            vals[i] = X[idx[i], f]
        order = np.argsort(vals, kind="mergesort")
        left[:] = 0.0
        for i in range(n - 1):
            left[y[idx[order[i]]]] += 1.0
            nl = i + 1
            nr = n - nl
            lo = vals[order[i]]
            hi = vals[order[i + 1]]
            if nl < min_leaf or nr < min_leaf or lo == hi:
                continue
            sl = 0.0
            sr = 0.0
            for c in range(n_classes):
                u = left[c] / nl
                v = (total[c] - left[c]) / nr
                sl += u * u
                sr += v * v
            score = nl * (1.0 - sl) + nr * (1.0 - sr)
            scores[a, i] = score
            thresholds[a, i] = 0.5 * (lo + hi)
            if score < best:
                best = score
    if best == np.inf:
        return -1, np.nan, np.inf
    cut = best + GINI_ATOL
    for a in range(nf):
        for i in range(n - 1):
            if scores[a, i] <= cut:
                return features[a], thresholds[a, i], scores[a, i]
    return -1, np.nan, np.inf
