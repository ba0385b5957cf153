"""Pure-numpy kernels; the fallback path when numba is off or unavailable."""

import numpy as np

TIE_RTOL = 1e-10
GINI_ATOL = 1e-10

NAME = "numpy"


def alpha_distances(Z, alpha):
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[0]
    D = np.zeros((n, n))
    for i in range(n - 1):
        diff = Z[i + 1 :] - Z[i]
        v = np.sqrt(np.einsum("ij,ij->i", diff, diff)) ** alpha
        D[i, i + 1 :] = v
        D[i + 1 :, i] = v
    return D


def _stat_grid(D, min_size, pooled):
    n = D.shape[0]
    m = min_size
    R = np.zeros((n, n + 1))
    np.cumsum(D, axis=1, out=R[:, 1:])
    w = np.zeros(n + 1)
    np.cumsum(R[np.arange(n), np.arange(n)], out=w[1:])
    # G[k, t] = sum_{j<k} R[j, t]  so that cross(t, k) = G[k, t] - G[t, t]
    G = np.zeros((n + 1, n + 1))
    np.cumsum(R, axis=0, out=G[1:])
    t = np.arange(m, n - m + 1)[:, None]
    k = np.arange(n + 1)[None, :]
    valid = k >= t + m
    GT = G.T
    B = GT[t[:, 0]] - GT[t[:, 0], t[:, 0]][:, None]
    nx = t.astype(float)
    ny = np.where(valid, k - t, 2).astype(float)
    WX = w[t]
    WY = w[None, :] - WX - B
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = 2.0 * B / (nx + ny) if pooled else 2.0 * B / (nx * ny)
        e = cross - WX / (nx * (nx - 1) / 2.0) - WY / (ny * (ny - 1) / 2.0)
        q = nx * ny / (nx + ny) * e
    return np.where(valid, q, -np.inf)


def split_scan(D, min_size, pooled):
    n = D.shape[0]
    if n < 2 * min_size:
        return -1, -1, np.nan
    q = _stat_grid(D, min_size, pooled)
    best = q.max()
    cut = best - TIE_RTOL * max(1.0, abs(best))
    flat = int(np.argmax(q.ravel() >= cut))
    row, k = divmod(flat, q.shape[1])
    return row + min_size, k, float(q[row, k])


def max_split_stat(D, min_size, pooled):
    if D.shape[0] < 2 * min_size:
        return np.nan
    return float(_stat_grid(D, min_size, pooled).max())


def permutation_max_stats(D, starts, stops, perms, min_size, pooled):
    out = np.empty(perms.shape[0])
    for r in range(perms.shape[0]):
        best = -np.inf
        for s, e in zip(starts, stops):
            if e - s < 2 * min_size:
                continue
            idx = perms[r, s:e]
            best = max(best, max_split_stat(D[np.ix_(idx, idx)], min_size, pooled))
        out[r] = best
    return out


def gini_best_split(X, y, idx, features, n_classes, min_leaf):
    n = idx.shape[0]
    yy = y[idx]
    total = np.bincount(yy, minlength=n_classes).astype(float)
    nl = np.arange(1, n, dtype=float)
    nr = n - nl
    scores, thresholds = [], []
    for f in features:
        vals = X[idx, f]
        order = np.argsort(vals, kind="mergesort")
        sv = vals[order]
        left = np.cumsum(np.eye(n_classes)[yy[order]], axis=0)[:-1]
        right = total - left
        with np.errstate(invalid="ignore", divide="ignore"):
            score = nl * (1.0 - ((left / nl[:, None]) ** 2).sum(1)) + nr * (
                1.0 - ((right / nr[:, None]) ** 2).sum(1)
            )
        ok = (nl >= min_leaf) & (nr >= min_leaf) & (sv[:-1] != sv[1:])
        scores.append(np.where(ok, score, np.inf))
        thresholds.append(0.5 * (sv[:-1] + sv[1:]))
    if not scores or n < 2:
        return -1, np.nan, np.inf
    scores = np.stack(scores)
    best = scores.min()
    if best == np.inf:
        return -1, np.nan, np.inf
    a, i = divmod(int(np.argmax(scores.ravel() <= best + GINI_ATOL)), scores.shape[1])
    return int(features[a]), float(thresholds[a][i]), float(scores[a, i])
