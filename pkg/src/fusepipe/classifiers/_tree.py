"""Exact-greedy decision trees shared by the forest, boosting and GBDT models.

Trees are stored as flat arrays so prediction vectorizes over samples; the
growth loops are numba-compiled.  Feature orders are argsorted once per tree
and partitioned in place on each split, so a node's scan is
O(n_node * n_features) with no per-node sort.

Per-node feature subsets draw from a splitmix64 stream keyed by the node's
path hash (child hash = mix(parent hash, direction)), never from a
sequential stream.  A tree grown with a depth cap is therefore identical to
the uncapped tree truncated at that depth, which the grid-search evaluators
exploit, and parallel and serial growth are byte-identical.

Tie rule everywhere: impurities within IMPURITY_EPS of the best tie, and the
first candidate in (feature scan order, cut position) order wins.  Real
impurity gaps are rational numbers far above the epsilon; float noise is far
below it, so a naive exhaustive oracle reproduces every split decision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

_NO_FEATURE = -1
IMPURITY_EPS = 1e-10

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)


@dataclass
class Tree:
    feature: np.ndarray  # int32, -1 at leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # majority class (classification) or leaf weight (regression)
    depth: np.ndarray  # int32, per node
    n_samples: np.ndarray  # int32, training rows reaching the node

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def max_node_depth(self) -> int:
        return int(self.depth.max()) if len(self.depth) else 0

    def apply(self, X: np.ndarray, depth_cap: int | None = None) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        cap = -1 if depth_cap is None else int(depth_cap)
        out = _apply_kernel(
            X, self.feature, self.threshold, self.left, self.right, self.depth, cap
        )
        return self.value[out]

    def apply_multi(self, X: np.ndarray, depth_caps: list) -> np.ndarray:
        """Leaf values under several depth caps from one traversal; a None
        cap means unlimited.  Returns (len(depth_caps), n_rows)."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        big = self.max_node_depth + 1
        caps = np.array([big if c is None else int(c) for c in depth_caps], dtype=np.int64)
        order = np.argsort(caps, kind="stable")
        nodes = _apply_multi_kernel(
            X, self.feature, self.threshold, self.left, self.right, self.depth, caps[order]
        )
        out = np.empty_like(nodes)
        out[order] = nodes
        return self.value[out]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "depth": self.depth.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, regression: bool) -> "Tree":
        return cls(
            feature=np.array(d["feature"], dtype=np.int32),
            threshold=np.array(d["threshold"], dtype=np.float64),
            left=np.array(d["left"], dtype=np.int32),
            right=np.array(d["right"], dtype=np.int32),
            value=np.array(d["value"], dtype=np.float64 if regression else np.int64),
            depth=np.array(d["depth"], dtype=np.int32),
            n_samples=np.array(d["n_samples"], dtype=np.int32),
        )


@nb.njit(cache=True)
def _apply_kernel(X, feature, threshold, left, right, depth, cap):
    n = X.shape[0]
    out = np.zeros(n, dtype=np.int64)
    for r in range(n):
        node = 0
        while feature[node] != _NO_FEATURE and (cap < 0 or depth[node] < cap):
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


@nb.njit(cache=True)
def _apply_multi_kernel(X, feature, threshold, left, right, depth, caps):
    # caps sorted ascending; the answer for cap c is the path node at depth c
    # (or the leaf if the path ends first)
    n = X.shape[0]
    m = len(caps)
    out = np.zeros((m, n), dtype=np.int64)
    for r in range(n):
        node = 0
        ci = 0
        while True:
            d = depth[node]
            while ci < m and caps[ci] == d:
                out[ci, r] = node
                ci += 1
            if feature[node] == _NO_FEATURE or ci >= m:
                break
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        while ci < m:
            out[ci, r] = node
            ci += 1
    return out


@nb.njit(cache=True, inline="always")
def _mix64(x):
    # splitmix64 finalizer
    x = (x + _GOLDEN) & _U64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@nb.njit(cache=True)
def _draw_subset(node_hash, d, k, out):
    """Partial Fisher-Yates draw of k distinct features, sorted ascending."""
    pool = np.empty(d, dtype=np.int32)
    for i in range(d):
        pool[i] = i
    state = node_hash
    for i in range(k):
        state = _mix64(state ^ _U64(i + 1))
        j = i + int(state % _U64(d - i))
        pool[i], pool[j] = pool[j], pool[i]
    sub = pool[:k]
    sub.sort()
    for i in range(k):
        out[i] = sub[i]


@nb.njit(cache=True)
def _grow(
    X,
    sorted_idx,  # (d, n) int32, each row one feature's ascending order
    y,  # int64 labels (classification) — ignored for regression
    w,  # float64 sample weights (classification)
    grad,  # float64 (regression) — ignored for classification
    hess,
    n_classes,
    regression,
    use_entropy,
    max_depth,  # -1 = unlimited
    min_samples_split,
    min_samples_leaf,
    max_features,  # = d for "all"
    tree_seed,
    reg_lambda,
):
    n, d = X.shape
    cap_nodes = 2 * n + 1
    feature = np.full(cap_nodes, _NO_FEATURE, dtype=np.int32)
    threshold = np.zeros(cap_nodes, dtype=np.float64)
    left = np.full(cap_nodes, -1, dtype=np.int32)
    right = np.full(cap_nodes, -1, dtype=np.int32)
    value = np.zeros(cap_nodes, dtype=np.float64)
    depth_arr = np.zeros(cap_nodes, dtype=np.int32)
    n_samples = np.zeros(cap_nodes, dtype=np.int32)
    n_nodes = 0

    # explicit stack: (start, end, depth, parent, is_left, hash_lo, hash_hi unused)
    max_stack = 2 * n + 2
    st_start = np.empty(max_stack, dtype=np.int64)
    st_end = np.empty(max_stack, dtype=np.int64)
    st_depth = np.empty(max_stack, dtype=np.int64)
    st_parent = np.empty(max_stack, dtype=np.int64)
    st_isleft = np.empty(max_stack, dtype=np.int64)
    st_hash = np.empty(max_stack, dtype=np.uint64)
    top = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_parent[0] = -1
    st_isleft[0] = 0
    st_hash[0] = _mix64(_U64(tree_seed) ^ _GOLDEN)
    top = 1

    feats = np.empty(d, dtype=np.int32)
    class_w = np.zeros(n_classes, dtype=np.float64)
    run_w = np.zeros(n_classes, dtype=np.float64)
    scratch = np.empty(n, dtype=np.int32)
    go_left_mask = np.zeros(n, dtype=np.bool_)

    while top > 0:
        top -= 1
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        parent = st_parent[top]
        is_left = st_isleft[top]
        node_hash = st_hash[top]
        size = end - start

        node = n_nodes
        n_nodes += 1
        depth_arr[node] = depth
        n_samples[node] = size
        if parent >= 0:
            if is_left == 1:
                left[parent] = node
            else:
                right[parent] = node

        # node value and (classification) impurity
        total_w = 0.0
        parent_metric = 0.0
        if regression:
            G = 0.0
            H = 0.0
            for p in range(start, end):
                r = sorted_idx[0, p]
                G += grad[r]
                H += hess[r]
            value[node] = -G / (H + reg_lambda)
            parent_metric = G * G / (H + reg_lambda)
        else:
            for c in range(n_classes):
                class_w[c] = 0.0
            for p in range(start, end):
                r = sorted_idx[0, p]
                class_w[y[r]] += w[r]
            best_c = 0
            for c in range(1, n_classes):
                if class_w[c] > class_w[best_c]:
                    best_c = c
            value[node] = best_c
            total_w = 0.0
            for c in range(n_classes):
                total_w += class_w[c]
            if total_w > 0.0:
                if use_entropy:
                    parent_metric = 0.0
                    for c in range(n_classes):
                        pc = class_w[c] / total_w
                        if pc > 0.0:
                            parent_metric -= pc * np.log2(pc)
                else:
                    s2 = 0.0
                    for c in range(n_classes):
                        pc = class_w[c] / total_w
                        s2 += pc * pc
                    parent_metric = 1.0 - s2
            else:
                parent_metric = 0.0

        # stopping checks
        if max_depth >= 0 and depth >= max_depth:
            continue
        if regression:
            if size < 2:
                continue
        else:
            if size < min_samples_split or size < 2 * min_samples_leaf:
                continue
            if parent_metric <= 0.0:
                continue

        # candidate features
        if max_features < d:
            _draw_subset(node_hash, d, max_features, feats)
            n_feats = max_features
        else:
            for i in range(d):
                feats[i] = i
            n_feats = d

        # split scan
        best_found = False
        best_metric = np.inf  # child impurity (cls) or -gain (reg)
        best_fpos = -1
        best_cut = -1
        for fpos in range(n_feats):
            f = feats[fpos]
            if regression:
                gl = 0.0
                hl = 0.0
                G = 0.0
                H = 0.0
                for p in range(start, end):
                    r = sorted_idx[f, p]
                    G += grad[r]
                    H += hess[r]
                parent_score = G * G / (H + reg_lambda)
                for cut in range(size - 1):
                    r = sorted_idx[f, start + cut]
                    gl += grad[r]
                    hl += hess[r]
                    v_here = X[r, f]
                    v_next = X[sorted_idx[f, start + cut + 1], f]
                    if v_next <= v_here:
                        continue
                    score = gl * gl / (hl + reg_lambda) + (G - gl) * (G - gl) / (
                        H - hl + reg_lambda
                    )
                    gain = 0.5 * (score - parent_score)
                    metric = -gain
                    if metric < best_metric - IMPURITY_EPS:
                        best_metric = metric
                        best_fpos = fpos
                        best_cut = cut
                        best_found = True
            else:
                for c in range(n_classes):
                    run_w[c] = 0.0
                lw = 0.0
                for cut in range(size - 1):
                    r = sorted_idx[f, start + cut]
                    run_w[y[r]] += w[r]
                    lw += w[r]
                    cnt = cut + 1
                    if cnt < min_samples_leaf or (size - cnt) < min_samples_leaf:
                        continue
                    v_here = X[r, f]
                    v_next = X[sorted_idx[f, start + cut + 1], f]
                    if v_next <= v_here:
                        continue
                    rw = total_w - lw
                    if lw > 0.0:
                        if use_entropy:
                            il = 0.0
                            for c in range(n_classes):
                                pc = run_w[c] / lw
                                if pc > 0.0:
                                    il -= pc * np.log2(pc)
                        else:
                            s2 = 0.0
                            for c in range(n_classes):
                                pc = run_w[c] / lw
                                s2 += pc * pc
                            il = 1.0 - s2
                    else:
                        il = 0.0
                    if rw > 0.0:
                        if use_entropy:
                            ir = 0.0
                            for c in range(n_classes):
                                pc = (class_w[c] - run_w[c]) / rw
                                if pc > 0.0:
                                    ir -= pc * np.log2(pc)
                        else:
                            s2 = 0.0
                            for c in range(n_classes):
                                pc = (class_w[c] - run_w[c]) / rw
                                s2 += pc * pc
                            ir = 1.0 - s2
                    else:
                        ir = 0.0
                    child = 0.0
                    if lw > 0.0:
                        child += lw * il
                    if rw > 0.0:
                        child += rw * ir
                    child /= total_w
                    if child < best_metric - IMPURITY_EPS:
                        best_metric = child
                        best_fpos = fpos
                        best_cut = cut
                        best_found = True

        if not best_found:
            continue
        if regression:
            if not (-best_metric) > 0.0:
                continue
        else:
            if not best_metric < parent_metric - IMPURITY_EPS:
                continue

        f = feats[best_fpos]
        lo_v = X[sorted_idx[f, start + best_cut], f]
        hi_v = X[sorted_idx[f, start + best_cut + 1], f]
        thr = (lo_v + hi_v) / 2.0
        if thr >= hi_v:  # midpoint rounded up to the right value
            thr = lo_v
        feature[node] = f
        threshold[node] = thr
        n_left = best_cut + 1

        # membership of the left child, then stable partition of every
        # feature's sorted segment
        for p in range(start, end):
            go_left_mask[sorted_idx[0, p]] = False
        for p in range(start, start + n_left):
            go_left_mask[sorted_idx[f, p]] = True
        for ff in range(d):
            a = 0
            b = n_left
            for p in range(start, end):
                r = sorted_idx[ff, p]
                if go_left_mask[r]:
                    scratch[a] = r
                    a += 1
                else:
                    scratch[b] = r
                    b += 1
            for p in range(size):
                sorted_idx[ff, start + p] = scratch[p]

        # push right first so the left child pops first (node ids in
        # depth-first preorder, matching recursive growth)
        st_start[top] = start + n_left
        st_end[top] = end
        st_depth[top] = depth + 1
        st_parent[top] = node
        st_isleft[top] = 0
        st_hash[top] = _mix64(node_hash ^ _U64(2))
        top += 1
        st_start[top] = start
        st_end[top] = start + n_left
        st_depth[top] = depth + 1
        st_parent[top] = node
        st_isleft[top] = 1
        st_hash[top] = _mix64(node_hash ^ _U64(1))
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        depth_arr[:n_nodes].copy(),
        n_samples[:n_nodes].copy(),
    )


def _presort(X: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int32))


_EMPTY_F = np.zeros(0, dtype=np.float64)
_EMPTY_I = np.zeros(0, dtype=np.int64)


def grow_classification_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    *,
    criterion: str = "gini",
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    tree_seed: int = 0,
    sample_weight: np.ndarray | None = None,
) -> Tree:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n, d = X.shape
    w = np.ones(n) if sample_weight is None else np.ascontiguousarray(sample_weight, dtype=np.float64)
    mf = d if max_features is None else min(max_features, d)
    parts = _grow(
        X,
        _presort(X),
        y,
        w,
        _EMPTY_F,
        _EMPTY_F,
        n_classes,
        False,
        criterion == "entropy",
        -1 if max_depth is None else int(max_depth),
        int(min_samples_split),
        int(min_samples_leaf),
        int(mf),
        np.uint64(tree_seed & 0xFFFFFFFFFFFFFFFF),
        1.0,
    )
    feature, threshold, left, right, value, depth, n_samples = parts
    return Tree(feature, threshold, left, right, value.astype(np.int64), depth, n_samples)


def grow_regression_tree(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    *,
    max_depth: int,
    reg_lambda: float = 1.0,
) -> Tree:
    """Second-order boosting tree: leaf weight -G/(H+lambda), split by the
    usual gain 0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)), accepted only
    when positive."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    parts = _grow(
        X,
        _presort(X),
        _EMPTY_I,
        _EMPTY_F,
        np.ascontiguousarray(grad, dtype=np.float64),
        np.ascontiguousarray(hess, dtype=np.float64),
        2,
        True,
        False,
        int(max_depth),
        2,
        1,
        d,
        np.uint64(0),
        float(reg_lambda),
    )
    feature, threshold, left, right, value, depth, n_samples = parts
    return Tree(feature, threshold, left, right, value, depth, n_samples)
