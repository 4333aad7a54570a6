"""Regression tree (CART): exact variance-minimizing splits.

Defaults mirror common regression practice: unlimited depth, one sample per
leaf, every feature considered at every split. Tie-breaking is pinned so
training is fully deterministic: lowest SSE, then lowest feature index,
then lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

LEAF = -1


@dataclass
class Tree:
    """Flat node arrays; node 0 is the root. feature == -1 marks a leaf."""

    feature: np.ndarray    # int32
    threshold: np.ndarray  # float64 (midpoint between neighboring values)
    left: np.ndarray       # int32 child indices
    right: np.ndarray      # int32
    value: np.ndarray      # float64 leaf mean (set for every node)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def predict_one(self, x) -> float:
        node = 0
        while self.feature[node] != LEAF:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return float(self.value[node])

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.asarray([self.predict_one(row) for row in X])

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f != LEAF}


def _best_split(X, y, idx, min_samples_leaf):
    """(sse, feature, threshold, left_idx, right_idx) or None if unsplittable.

    Candidate thresholds are midpoints between neighboring distinct sorted
    values; left/right SSE comes from prefix sums, evaluated for the whole
    column at once.
    """
    best = None
    n = idx.shape[0]
    n_l = np.arange(1, n)
    n_r = n - n_l
    for f in range(X.shape[1]):
        values = X[idx, f]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y[idx][order]
        valid = (sv[:-1] != sv[1:]) & (n_l >= min_samples_leaf) & (n_r >= min_samples_leaf)
        if not np.any(valid):
            continue
        cum_y = np.cumsum(sy)
        cum_y2 = np.cumsum(sy * sy)
        sum_l = cum_y[:-1]
        sse_l = cum_y2[:-1] - sum_l * sum_l / n_l
        sum_r = cum_y[-1] - sum_l
        sse_r = (cum_y2[-1] - cum_y2[:-1]) - sum_r * sum_r / n_r
        sse = sse_l + sse_r
        sse[~valid] = np.inf
        i = int(np.argmin(sse))  # first minimum: lowest threshold wins ties
        thr = (sv[i] + sv[i + 1]) / 2.0
        key = (float(sse[i]), f, thr)
        if best is None or key < best[0]:
            left_mask = values <= thr
            best = (key, f, thr, idx[left_mask], idx[~left_mask])
    if best is None:
        return None
    key, f, thr, li, ri = best
    return key[0], f, thr, li, ri


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: Optional[int] = None,
    min_samples_leaf: int = 1,
    min_samples_split: int = 2,
) -> Tree:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad shapes X{X.shape} y{y.shape}")
    if X.shape[1] == 0:
        raise ValueError("no features to split on")
    if X.shape[0] == 0:
        raise ValueError("no training rows")

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node(idx):
        node = len(feature)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.mean(y[idx])))
        return node

    # (node, idx, depth) work stack; children expanded depth-first, left first.
    root_idx = np.arange(X.shape[0])
    stack = [(new_node(root_idx), root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        if idx.shape[0] < min_samples_split:
            continue
        if np.all(y[idx] == y[idx][0]):
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        split = _best_split(X, y, idx, min_samples_leaf)
        if split is None:
            continue
        _, f, thr, li, ri = split
        feature[node] = f
        threshold[node] = thr
        l_node = new_node(li)
        r_node = new_node(ri)
        left[node] = l_node
        right[node] = r_node
        stack.append((r_node, ri, depth + 1))
        stack.append((l_node, li, depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
    )
