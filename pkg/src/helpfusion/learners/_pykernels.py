"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built, or when ``HELPFUSION_PURE=1``. Results
are bit-identical to the compiled versions: same random stream, same float
expressions, same first-index tie breaking.
"""

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)


def _best_threshold(vals, labels, pos):
    """Best split of one feature: ``(score, threshold)`` or ``None`` if constant."""
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    sl = labels[order]
    n = len(sv)
    boundary = sv[:-1] < sv[1:]
    if not boundary.any():
        return None
    pl = np.cumsum(sl[:-1], dtype=np.int64).astype(np.float64)
    nl = np.arange(1, n, dtype=np.float64)
    ql = nl - pl
    nr = n - nl
    pr = pos - pl
    qr = (n - pos) - ql
    score = (pl * pl + ql * ql) / nl + (pr * pr + qr * qr) / nr
    score = np.where(boundary, score, -np.inf)
    k = int(np.argmax(score))
    thr = sv[k] + (sv[k + 1] - sv[k]) / 2.0
    if thr >= sv[k + 1]:
        thr = sv[k]
    return float(score[k]), float(thr)


def grow_tree(X, y, samples, max_depth, min_samples_split, max_features, seed):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.uint8)
    rng = SplitMix64(seed)
    d = X.shape[1]
    feature, threshold, left, right, npos_l, n_l = [-1], [0.0], [-1], [-1], [0], [0]
    stack = [(0, np.array(samples, dtype=np.intp), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = len(idx)
        labels = y[idx]
        pos = int(labels.sum(dtype=np.int64))
        npos_l[node] = pos
        n_l[node] = n
        if pos == 0 or pos == n or depth >= max_depth or n < min_samples_split:
            continue

        perm = list(range(d))
        for i in range(d - 1, 0, -1):
            j = rng.next() % (i + 1)
            perm[i], perm[j] = perm[j], perm[i]

        rows = X[idx]
        cand = []
        for f in perm:
            if len(cand) >= max_features:
                break
            col = rows[:, f]
            if col.max() > col.min():
                cand.append(f)
        if not cand:
            continue

        best_score, best_f, best_thr = -1.0, -1, 0.0
        for f in sorted(cand):
            res = _best_threshold(rows[:, f], labels, pos)
            if res is not None and res[0] > best_score:
                best_score, best_thr = res
                best_f = f

        go_left = rows[:, best_f] <= best_thr
        li = len(feature)
        for _ in range(2):
            feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
            npos_l.append(0); n_l.append(0)
        feature[node], threshold[node] = best_f, best_thr
        left[node], right[node] = li, li + 1
        stack.append((li + 1, idx[~go_left], depth + 1))
        stack.append((li, idx[go_left], depth + 1))

    return (np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(npos_l, dtype=np.int64), np.array(n_l, dtype=np.int64))


def tree_apply(feature, threshold, left, right, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        f = feature[nd]
        go_left = X[r, f] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node


def smo_solve(K, y, C, tol, max_iter):
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = K.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K).copy()
    tau = 1e-12
    it = 0
    while True:
        v = (-y) * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        vu = np.where(up, v, -np.inf)
        i = int(np.argmax(vu))
        m = vu[i]
        M = np.where(low, v, np.inf).min()
        gap = m - M
        if gap < tol or it >= max_iter:
            break

        cand = low & (v < m)
        if not cand.any():
            break
        b = m - v
        a = (K[i, i] + diag) - 2.0 * K[i]
        a = np.where(a <= 0, tau, a)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))

        a_ij = (K[i, i] + K[j, j]) - 2.0 * K[i, j]
        if a_ij <= 0:
            a_ij = tau
        lam = (m - v[j]) / a_ij
        which = 0
        lim = C - alpha[i] if y[i] > 0 else alpha[i]
        if lim <= lam:
            lam, which = lim, 1
        lim = alpha[j] if y[j] > 0 else C - alpha[j]
        if lim <= lam:
            lam, which = lim, 2

        if which == 1:
            alpha[i] = C if y[i] > 0 else 0.0
        else:
            alpha[i] = alpha[i] + y[i] * lam
        if which == 2:
            alpha[j] = 0.0 if y[j] > 0 else C
        else:
            alpha[j] = alpha[j] - y[j] * lam
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)

        G += y * (lam * (K[i] - K[j]))
        it += 1
    return alpha, G, float(gap), it
