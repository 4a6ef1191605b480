# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for tree growth, tree traversal and SMO.

Semantics mirror ``_pykernels`` exactly; the two are tested against each
other, so any change here must be made there too.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef struct Pair:
    double value
    int label


cdef inline void _swap(Pair* a, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Pair t = a[i]
    a[i] = a[j]
    a[j] = t


cdef void _sift(Pair* a, Py_ssize_t root, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t child
    while 2 * root + 1 < n:
        child = 2 * root + 1
        if child + 1 < n and a[child + 1].value > a[child].value:
            child += 1
        if a[child].value > a[root].value:
            _swap(a, root, child)
            root = child
        else:
            return


cdef void _heapsort(Pair* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n // 2 - 1, -1, -1):
        _sift(a, i, n)
    for i in range(n - 1, 0, -1):
        _swap(a, 0, i)
        _sift(a, 0, i)


cdef void _sort_pairs(Pair* a, Py_ssize_t n, int budget) noexcept nogil:
    """Introsort with three-way partitioning: linear passes when few values repeat."""
    cdef Py_ssize_t lt, gt, i
    cdef double p, x, y, z
    while n > 16:
        if budget <= 0:
            _heapsort(a, n)
            return
        budget -= 1
        x = a[0].value
        y = a[n // 2].value
        z = a[n - 1].value
        # median of three
        if x < y:
            p = y if y < z else (z if x < z else x)
        else:
            p = x if x < z else (z if y < z else y)
        lt = 0
        gt = n - 1
        i = 0
        while i <= gt:
            if a[i].value < p:
                _swap(a, lt, i)
                lt += 1
                i += 1
            elif a[i].value > p:
                _swap(a, i, gt)
                gt -= 1
            else:
                i += 1
        # recurse on the smaller side, loop on the larger
        if lt < n - gt - 1:
            _sort_pairs(a, lt, budget)
            a = a + gt + 1
            n = n - gt - 1
        else:
            _sort_pairs(a + gt + 1, n - gt - 1, budget)
            n = lt
    cdef Pair key
    cdef Py_ssize_t j
    for i in range(1, n):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j].value > key.value:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def grow_tree(const double[:, ::1] X, const unsigned char[::1] y, const cnp.intp_t[::1] samples,
              int max_depth, int min_samples_split, int max_features, uint64_t seed):
    """Grow one CART tree (Gini) on the rows listed in ``samples`` (duplicates allowed).

    Returns ``(feature, threshold, left, right, n_pos, n)`` node arrays;
    leaves have ``feature == -1``.
    """
    cdef Py_ssize_t n_total = samples.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t cap = 2 * n_total + 1
    cdef uint64_t rng = seed

    idx_arr = np.array(samples, dtype=np.intp, copy=True)
    cdef cnp.intp_t[::1] idx = idx_arr
    perm_arr = np.empty(max(d, 1), dtype=np.intp)
    cdef cnp.intp_t[::1] perm = perm_arr
    cand_arr = np.empty(max(d, 1), dtype=np.intp)
    cdef cnp.intp_t[::1] cand = cand_arr

    feat_arr = np.full(cap, -1, dtype=np.int64)
    thr_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int64)
    right_arr = np.full(cap, -1, dtype=np.int64)
    npos_arr = np.zeros(cap, dtype=np.int64)
    n_arr = np.zeros(cap, dtype=np.int64)
    cdef int64_t[::1] feature = feat_arr
    cdef double[::1] threshold = thr_arr
    cdef int64_t[::1] left = left_arr
    cdef int64_t[::1] right = right_arr
    cdef int64_t[::1] npos_v = npos_arr
    cdef int64_t[::1] n_v = n_arr
    # stack rows: node, start, end, depth
    stack_arr = np.empty((cap + 1, 4), dtype=np.int64)
    cdef int64_t[:, ::1] stack = stack_arr

    cdef Pair* pairs = <Pair*>malloc(max(n_total, 1) * sizeof(Pair))
    if pairs == NULL:
        raise MemoryError()

    cdef Py_ssize_t start, end, n, i, j, k, f, n_cand, best_f, mid, top, n_nodes, c
    cdef int64_t depth, node
    cdef int64_t pos, pl, ql
    cdef double pr, qr, nl, nr, score, best_score, best_thr, thr, lo
    cdef cnp.intp_t tmp
    cdef int budget = 0
    k = n_total
    while k > 0:
        budget += 2
        k >>= 1

    with nogil:
        n_nodes = 1
        top = 0
        stack[0, 0] = 0; stack[0, 1] = 0; stack[0, 2] = n_total; stack[0, 3] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top, 0]; start = stack[top, 1]; end = stack[top, 2]; depth = stack[top, 3]
            n = end - start
            pos = 0
            for i in range(start, end):
                pos += y[idx[i]]
            npos_v[node] = pos
            n_v[node] = n
            if pos == 0 or pos == n or depth >= max_depth or n < min_samples_split:
                continue

            for i in range(d):
                perm[i] = i
            for i in range(d - 1, 0, -1):
                j = <Py_ssize_t>(_splitmix(&rng) % <uint64_t>(i + 1))
                tmp = perm[i]; perm[i] = perm[j]; perm[j] = tmp

            n_cand = 0
            for k in range(d):
                if n_cand >= max_features:
                    break
                f = perm[k]
                lo = X[idx[start], f]
                for i in range(start + 1, end):
                    if X[idx[i], f] != lo:
                        cand[n_cand] = f
                        n_cand += 1
                        break
            if n_cand == 0:
                continue
            # ascending feature order for the tie rule
            for i in range(1, n_cand):
                tmp = cand[i]
                j = i - 1
                while j >= 0 and cand[j] > tmp:
                    cand[j + 1] = cand[j]
                    j -= 1
                cand[j + 1] = tmp

            best_score = -1.0
            best_f = -1
            best_thr = 0.0
            for c in range(n_cand):
                f = cand[c]
                for i in range(n):
                    pairs[i].value = X[idx[start + i], f]
                    pairs[i].label = y[idx[start + i]]
                _sort_pairs(pairs, n, budget)
                pl = 0
                ql = 0
                for i in range(n - 1):
                    if pairs[i].label:
                        pl += 1
                    else:
                        ql += 1
                    if pairs[i].value < pairs[i + 1].value:
                        nl = <double>(i + 1)
                        nr = <double>(n - i - 1)
                        pr = <double>(pos - pl)
                        qr = <double>((n - pos) - ql)
                        score = (<double>pl * <double>pl + <double>ql * <double>ql) / nl + (pr * pr + qr * qr) / nr
                        if score > best_score:
                            best_score = score
                            best_f = f
                            thr = pairs[i].value + (pairs[i + 1].value - pairs[i].value) / 2.0
                            if thr >= pairs[i + 1].value:
                                thr = pairs[i].value
                            best_thr = thr

            # in-place partition: rows with x <= thr to the front
            i = start
            j = end - 1
            while i <= j:
                if X[idx[i], best_f] <= best_thr:
                    i += 1
                else:
                    tmp = idx[i]; idx[i] = idx[j]; idx[j] = tmp
                    j -= 1
            mid = i

            feature[node] = best_f
            threshold[node] = best_thr
            left[node] = n_nodes
            right[node] = n_nodes + 1
            stack[top, 0] = n_nodes + 1; stack[top, 1] = mid; stack[top, 2] = end; stack[top, 3] = depth + 1
            top += 1
            stack[top, 0] = n_nodes; stack[top, 1] = start; stack[top, 2] = mid; stack[top, 3] = depth + 1
            top += 1
            n_nodes += 2
    free(pairs)

    return (feat_arr[:n_nodes].copy(), thr_arr[:n_nodes].copy(), left_arr[:n_nodes].copy(),
            right_arr[:n_nodes].copy(), npos_arr[:n_nodes].copy(), n_arr[:n_nodes].copy())


def tree_apply(const int64_t[::1] feature, const double[::1] threshold,
               const int64_t[::1] left, const int64_t[::1] right, const double[:, ::1] X):
    """Leaf index reached by every row of ``X``."""
    cdef Py_ssize_t n = X.shape[0], r
    cdef int64_t node
    out_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    with nogil:
        for r in range(n):
            node = 0
            while feature[node] >= 0:
                if X[r, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[r] = node
    return out_arr


def smo_solve(const double[:, ::1] K, const double[::1] y, double C, double tol, long max_iter):
    """Dual soft-margin SVM by SMO with second-order working-set selection.

    ``y`` holds +1/-1. Returns ``(alpha, G, gap, iterations)`` where ``G`` is the
    dual gradient and ``gap`` the final maximal KKT violation.
    """
    cdef Py_ssize_t n = K.shape[0], t, i, j
    alpha_arr = np.zeros(n, dtype=np.float64)
    G_arr = -np.ones(n, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = G_arr
    cdef double m, M, v, b_t, a_t, obj, best_obj, lam, lim, a_ij
    cdef int which
    cdef long it = 0
    cdef double gap = 0.0
    cdef double tau = 1e-12

    with nogil:
        while True:
            m = -1e300
            M = 1e300
            i = -1
            for t in range(n):
                v = -y[t] * G[t]
                if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                    if v > m:
                        m = v
                        i = t
                if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                    if v < M:
                        M = v
            if i < 0 or M >= 1e300:
                gap = 0.0
                break
            gap = m - M
            if gap < tol or it >= max_iter:
                break

            j = -1
            best_obj = 1e300
            for t in range(n):
                if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                    v = -y[t] * G[t]
                    if v < m:
                        b_t = m - v
                        a_t = (K[i, i] + K[t, t]) - 2.0 * K[i, t]
                        if a_t <= 0:
                            a_t = tau
                        obj = -(b_t * b_t) / a_t
                        if obj < best_obj:
                            best_obj = obj
                            j = t
            if j < 0:
                break

            a_ij = (K[i, i] + K[j, j]) - 2.0 * K[i, j]
            if a_ij <= 0:
                a_ij = tau
            lam = (m - (-y[j] * G[j])) / a_ij
            which = 0
            lim = C - alpha[i] if y[i] > 0 else alpha[i]
            if lim <= lam:
                lam = lim
                which = 1
            lim = alpha[j] if y[j] > 0 else C - alpha[j]
            if lim <= lam:
                lam = lim
                which = 2

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

            for t in range(n):
                G[t] += y[t] * (lam * (K[i, t] - K[j, t]))
            it += 1

    return alpha_arr, G_arr, gap, it

