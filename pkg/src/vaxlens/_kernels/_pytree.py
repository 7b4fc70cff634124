"""Pure-numpy tree kernels (fallback backend).

Semantics are the contract both backends implement:

* Split quality maximizes ``(cl0^2 + cl1^2)/nl + (cr0^2 + cr1^2)/nr`` over
  candidate boundaries (equivalent to minimizing weighted Gini impurity).
* Thresholds are midpoints of consecutive distinct sorted values; if the
  midpoint rounds up to the right value it is clamped to the left value.
* Ties: strictly-better quality wins, so the lowest candidate column index
  and then the lowest threshold is kept.
* Candidate features per node are drawn by a partial Fisher-Yates shuffle
  driven by SplitMix64 and then sorted ascending; when every feature is a
  candidate no random numbers are consumed at all.
* Children are pushed right-then-left on an explicit stack, and child node
  ids are allocated left child first.

The compiled backend mirrors each of these choices (including the order of
floating-point operations; FMA contraction is disabled there), so the two
backends produce identical trees.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def grow_tree(X, y, sample_idx, max_depth, min_leaf, k_features, rng_seed):
    """Grow one binary classification tree.

    Args:
        X: (n, m) float64 design matrix.
        y: (n,) int8 labels in {0, 1}.
        sample_idx: row indices (with repeats for bootstrap) to train on.
        max_depth: maximum split depth (root is depth 0).
        min_leaf: minimum rows per child.
        k_features: candidate features per split; >= m means all.
        rng_seed: SplitMix64 state for the per-node feature draws.

    Returns:
        (feature, threshold, left, right, n0, n1) arrays; feature == -1
        marks a leaf, n0/n1 are class counts of the rows routed there.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    yv = np.ascontiguousarray(y, dtype=np.int8)
    idx = np.asarray(sample_idx, dtype=np.intp).copy()
    n = len(idx)
    m = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    n0 = np.zeros(cap, dtype=np.float64)
    n1 = np.zeros(cap, dtype=np.float64)

    state = int(rng_seed) & _MASK64
    use_all = k_features >= m
    node_count = 1
    stack = [(0, 0, n, 0)]
    while stack:
        node, start, end, depth = stack.pop()
        seg = idx[start:end]
        yseg = yv[seg]
        nn = end - start
        c1 = float(np.sum(yseg, dtype=np.int64))
        c0 = float(nn) - c1
        n0[node] = c0
        n1[node] = c1
        if depth >= max_depth or c0 == 0.0 or c1 == 0.0 or nn < 2 * min_leaf:
            continue

        if use_all:
            cand = range(m)
        else:
            pool = list(range(m))
            for i in range(k_features):
                state = (state + _GAMMA) & _MASK64
                j = i + _mix64(state) % (m - i)
                pool[i], pool[j] = pool[j], pool[i]
            cand = sorted(pool[:k_features])

        best_g = -np.inf
        best_f = -1
        best_thr = 0.0
        ytot = c1
        for f in cand:
            xs = X[seg, f]
            order = np.argsort(xs)
            sx = xs[order]
            c1cum = np.cumsum(yseg[order].astype(np.float64))
            nl = np.arange(1, nn, dtype=np.float64)
            valid = sx[1:] > sx[:-1]
            if min_leaf > 1:
                valid &= (nl >= min_leaf) & (nn - nl >= min_leaf)
            if not valid.any():
                continue
            cl1 = c1cum[:-1]
            cl0 = nl - cl1
            nr = nn - nl
            cr1 = ytot - cl1
            cr0 = nr - cr1
            g = (cl0 * cl0 + cl1 * cl1) / nl + (cr0 * cr0 + cr1 * cr1) / nr
            g[~valid] = -np.inf
            b = int(np.argmax(g))
            if g[b] > best_g:
                thr = 0.5 * (sx[b] + sx[b + 1])
                if thr == sx[b + 1]:
                    thr = sx[b]
                best_g = g[b]
                best_f = f
                best_thr = thr

        if best_f < 0:
            continue

        go_left = X[seg, best_f] <= best_thr
        nl_rows = seg[go_left]  # fancy indexing copies; seg itself aliases idx
        nr_rows = seg[~go_left]
        idx[start : start + len(nl_rows)] = nl_rows
        idx[start + len(nl_rows) : end] = nr_rows
        lid, rid = node_count, node_count + 1
        node_count += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        mid = start + len(nl_rows)
        stack.append((rid, mid, end, depth + 1))
        stack.append((lid, start, mid, depth + 1))

    s = slice(0, node_count)
    return (
        feature[s].copy(),
        threshold[s].copy(),
        left[s].copy(),
        right[s].copy(),
        n0[s].copy(),
        n1[s].copy(),
    )


def tree_apply(feature, threshold, left, right, X):
    """Route every row of X to its leaf; returns int32 leaf node ids."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int32)
    if n == 0:
        return node
    active = feature[node] >= 0
    while active.any():
        rows = np.flatnonzero(active)
        nd = node[rows]
        ff = feature[nd]
        go_left = X[rows, ff] <= threshold[nd]
        node[rows] = np.where(go_left, left[nd], right[nd])
        active[rows] = feature[node[rows]] >= 0
    return node
