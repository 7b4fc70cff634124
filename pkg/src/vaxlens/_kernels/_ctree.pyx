# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled tree kernels.

Bit-for-bit mirror of ``_pytree``: same split quality formula (evaluated in
the same operation order, FMA contraction disabled via build flags), same
threshold midpoint-and-clamp rule, same strict-improvement tie-breaking,
same SplitMix64 feature draws, same stack discipline. Any divergence between
the two backends is a bug; ``tests/test_kernels_parity.py`` enforces this.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY
from libc.stdint cimport int8_t, int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()

cdef uint64_t _GAMMA = <uint64_t>0x9E3779B97F4A7C15


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef struct VPair:
    double v
    double yv


cdef int _cmp_vpair(const void* a, const void* b) noexcept nogil:
    cdef double av = (<const VPair*> a).v
    cdef double bv = (<const VPair*> b).v
    if av < bv:
        return -1
    if av > bv:
        return 1
    return 0


def grow_tree(X, y, sample_idx, max_depth, min_leaf, k_features, rng_seed):
    """See ``_pytree.grow_tree``; identical contract and identical output."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y_arr = np.ascontiguousarray(y, dtype=np.int8)
    idx_arr = np.asarray(sample_idx, dtype=np.int64).copy()

    cdef const double[:, ::1] Xv = X
    cdef const int8_t[::1] yv = y_arr
    cdef int64_t[::1] idx = idx_arr
    cdef Py_ssize_t n = idx_arr.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t cap = 2 * n + 1

    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    n0_arr = np.zeros(cap, dtype=np.float64)
    n1_arr = np.zeros(cap, dtype=np.float64)
    stack_arr = np.empty((cap, 4), dtype=np.int64)

    cdef int32_t[::1] feat = feature_arr
    cdef double[::1] thr_v = threshold_arr
    cdef int32_t[::1] lft = left_arr
    cdef int32_t[::1] rgt = right_arr
    cdef double[::1] n0v = n0_arr
    cdef double[::1] n1v = n1_arr
    cdef int64_t[:, ::1] stk = stack_arr

    cdef uint64_t state = <uint64_t> rng_seed
    cdef Py_ssize_t k = k_features
    cdef bint use_all = k >= m
    cdef Py_ssize_t maxd = max_depth
    cdef double minleaf_d = <double> min_leaf
    cdef Py_ssize_t min2 = 2 * min_leaf

    cdef VPair* buf = <VPair*> malloc((n if n > 0 else 1) * sizeof(VPair))
    cdef int64_t* pool = <int64_t*> malloc((m if m > 0 else 1) * sizeof(int64_t))
    cdef int64_t* tmpseg = <int64_t*> malloc((n if n > 0 else 1) * sizeof(int64_t))
    if buf == NULL or pool == NULL or tmpseg == NULL:
        free(buf); free(pool); free(tmpseg)
        raise MemoryError()

    cdef Py_ssize_t sp, node_count, node, start, end, depth, nn
    cdef Py_ssize_t i, j, fi, f, kc, mid, p, lid, rid
    cdef int64_t r, swp, key
    cdef int64_t c1i
    cdef double c0d, c1d, best_g, best_thr, cl1, cl0, nl, nr, cr1, cr0, g, thr
    cdef Py_ssize_t best_f

    with nogil:
        node_count = 1
        sp = 0
        stk[sp, 0] = 0; stk[sp, 1] = 0; stk[sp, 2] = n; stk[sp, 3] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            node = <Py_ssize_t> stk[sp, 0]
            start = <Py_ssize_t> stk[sp, 1]
            end = <Py_ssize_t> stk[sp, 2]
            depth = <Py_ssize_t> stk[sp, 3]
            nn = end - start
            c1i = 0
            for i in range(start, end):
                c1i += yv[idx[i]]
            c1d = <double> c1i
            c0d = <double> nn - c1d
            n0v[node] = c0d
            n1v[node] = c1d
            if depth >= maxd or c0d == 0.0 or c1d == 0.0 or nn < min2:
                continue

            for i in range(m):
                pool[i] = i
            if use_all:
                kc = m
            else:
                for i in range(k):
                    state = state + _GAMMA
                    r = <int64_t> (_mix64(state) % <uint64_t> (m - i))
                    j = i + <Py_ssize_t> r
                    swp = pool[i]; pool[i] = pool[j]; pool[j] = swp
                kc = k
                # insertion sort of the drawn candidates, ascending
                for i in range(1, kc):
                    key = pool[i]
                    j = i - 1
                    while j >= 0 and pool[j] > key:
                        pool[j + 1] = pool[j]
                        j -= 1
                    pool[j + 1] = key

            best_g = -INFINITY
            best_f = -1
            best_thr = 0.0
            for fi in range(kc):
                f = <Py_ssize_t> pool[fi]
                for i in range(nn):
                    buf[i].v = Xv[idx[start + i], f]
                    buf[i].yv = <double> yv[idx[start + i]]
                qsort(buf, nn, sizeof(VPair), _cmp_vpair)
                cl1 = 0.0
                for i in range(nn - 1):
                    cl1 += buf[i].yv
                    if buf[i + 1].v > buf[i].v:
                        nl = <double> (i + 1)
                        nr = <double> nn - nl
                        if nl >= minleaf_d and nr >= minleaf_d:
                            cl0 = nl - cl1
                            cr1 = c1d - cl1
                            cr0 = nr - cr1
                            g = (cl0 * cl0 + cl1 * cl1) / nl + (cr0 * cr0 + cr1 * cr1) / nr
                            if g > best_g:
                                thr = 0.5 * (buf[i].v + buf[i + 1].v)
                                if thr == buf[i + 1].v:
                                    thr = buf[i].v
                                best_g = g
                                best_f = f
                                best_thr = thr

            if best_f < 0:
                continue

            for i in range(nn):
                tmpseg[i] = idx[start + i]
            p = start
            for i in range(nn):
                if Xv[tmpseg[i], best_f] <= best_thr:
                    idx[p] = tmpseg[i]
                    p += 1
            mid = p
            for i in range(nn):
                if not (Xv[tmpseg[i], best_f] <= best_thr):
                    idx[p] = tmpseg[i]
                    p += 1

            lid = node_count
            rid = node_count + 1
            node_count += 2
            feat[node] = <int32_t> best_f
            thr_v[node] = best_thr
            lft[node] = <int32_t> lid
            rgt[node] = <int32_t> rid
            stk[sp, 0] = rid; stk[sp, 1] = mid; stk[sp, 2] = end; stk[sp, 3] = depth + 1
            sp += 1
            stk[sp, 0] = lid; stk[sp, 1] = start; stk[sp, 2] = mid; stk[sp, 3] = depth + 1
            sp += 1

    free(buf)
    free(pool)
    free(tmpseg)
    s = slice(0, node_count)
    return (
        feature_arr[s].copy(),
        threshold_arr[s].copy(),
        left_arr[s].copy(),
        right_arr[s].copy(),
        n0_arr[s].copy(),
        n1_arr[s].copy(),
    )


def tree_apply(feature, threshold, left, right, X):
    """Route every row of X to its leaf; returns int32 leaf node ids."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    f_arr = np.ascontiguousarray(feature, dtype=np.int32)
    t_arr = np.ascontiguousarray(threshold, dtype=np.float64)
    l_arr = np.ascontiguousarray(left, dtype=np.int32)
    r_arr = np.ascontiguousarray(right, dtype=np.int32)

    cdef const double[:, ::1] Xv = X
    cdef const int32_t[::1] featv = f_arr
    cdef const double[::1] thrv = t_arr
    cdef const int32_t[::1] lv = l_arr
    cdef const int32_t[::1] rv = r_arr
    cdef Py_ssize_t n = X.shape[0]
    out_arr = np.zeros(n, dtype=np.int32)
    cdef int32_t[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int32_t node

    with nogil:
        for i in range(n):
            node = 0
            while featv[node] >= 0:
                if Xv[i, featv[node]] <= thrv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            out[i] = node
    return out_arr
