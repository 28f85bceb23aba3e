"""CART decision trees with sample weights.

One builder serves three uses: the binary classifier used as a baseline
learner, multi-class trees and regression trees used by the model-based
imputer. Splits are axis-aligned ``x[f] <= threshold`` tests chosen greedily
by weighted impurity decrease. ``min_samples_leaf`` and
``min_samples_split`` are compared against *weighted* row counts.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from fairpipe.errors import DegenerateLabels, DimensionMismatch

CRITERIA = ("gini", "entropy")

_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class TreeModel:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    node_weight: np.ndarray
    node_depth: np.ndarray
    task: str
    classes: tuple
    criterion: str
    max_depth: int | None
    min_samples_leaf: float
    min_samples_split: float
    seed: int
    n_features: int
    degenerate: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        return int(self.node_depth.max())

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(getattr(X, "values", X), dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"tree expects {self.n_features} features, got shape {X.shape}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            inner = self.feature[node] >= 0
            if not inner.any():
                return node
            r, nd = rows[inner], node[inner]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])

    def predict_proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict_scores(self, X) -> np.ndarray:
        """Positive-class probability (binary classification trees only)."""
        if self.task != "classification" or tuple(self.classes) != (0, 1):
            raise ValueError("predict_scores needs a binary classification tree over classes (0, 1)")
        return self.value[self.apply(X), 1]

    def predict(self, X) -> np.ndarray:
        if self.task == "regression":
            return self.value[self.apply(X), 0]
        idx = np.argmax(self.predict_proba(X), axis=1)
        return np.asarray(self.classes, dtype=object)[idx]


def _node_cost(stats: np.ndarray, task: str, criterion: str) -> np.ndarray:
    """Node weight times node impurity, computed from (cumulative) statistics.

    Classification stats are weighted class counts along the last axis;
    regression stats are ``[sum w, sum w*y, sum w*y**2]``.
    """
    if task == "regression":
        w, wy, wy2 = stats[..., 0], stats[..., 1], stats[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            sse = wy2 - np.where(w > 0, wy * wy / w, 0.0)
        return np.maximum(sse, 0.0)
    total = stats.sum(axis=-1)
    if criterion == "gini":
        with np.errstate(divide="ignore", invalid="ignore"):
            sq = np.where(total > 0, (stats * stats).sum(axis=-1) / total, 0.0)
        return np.maximum(total - sq, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = stats / total[..., None]
        terms = np.where(stats > 0, stats * np.log2(p), 0.0)
    return np.maximum(-terms.sum(axis=-1), 0.0)


def _stats_weight(stats: np.ndarray, task: str) -> np.ndarray:
    return stats[..., 0] if task == "regression" else stats.sum(axis=-1)


@njit(cache=True, nogil=True)
def _cost(s, code):
    """Node weight times impurity for one statistics vector (see :func:`_node_cost`)."""
    if code == 2:
        if s[0] <= 0.0:
            return 0.0
        v = s[2] - s[1] * s[1] / s[0]
        return v if v > 0.0 else 0.0
    total = 0.0
    for k in range(s.shape[0]):
        total += s[k]
    if total <= 0.0:
        return 0.0
    v = 0.0
    if code == 0:
        sq = 0.0
        for k in range(s.shape[0]):
            sq += s[k] * s[k]
        v = total - sq / total
    else:
        for k in range(s.shape[0]):
            if s[k] > 0.0:
                v -= s[k] * np.log2(s[k] / total)
    return v if v > 0.0 else 0.0


@njit(cache=True, nogil=True)
def _split_search(X, stats, idx, code, min_leaf, eps):
    n = idx.shape[0]
    d = X.shape[1]
    K = stats.shape[1]
    total = np.zeros(K)
    for i in range(n):
        for k in range(K):
            total[k] += stats[idx[i], k]
    W = total[0] if code == 2 else total.sum()
    parent = _cost(total, code)
    best_gain = -np.inf
    best_f = -1
    best_thr = 0.0
    col = np.empty(n)
    left = np.empty(K)
    right = np.empty(K)
    for f in range(d):
        for i in range(n):
            col[i] = X[idx[i], f]
        order = np.argsort(col, kind="mergesort")
        left[:] = 0.0
        for p in range(n - 1):
            r = idx[order[p]]
            for k in range(K):
                left[k] += stats[r, k]
            lo = col[order[p]]
            hi = col[order[p + 1]]
            if not hi > lo:
                continue
            for k in range(K):
                right[k] = total[k] - left[k]
            if code == 2:
                lw, rw = left[0], right[0]
            else:
                lw, rw = left.sum(), right.sum()
            if lw <= 0.0 or rw <= 0.0 or lw < min_leaf - eps or rw < min_leaf - eps:
                continue
            gain = (parent - _cost(left, code) - _cost(right, code)) / W
            if gain > best_gain + 1e-12:
                best_gain = gain
                best_f = f
                thr = lo + (hi - lo) / 2.0
                best_thr = lo if thr >= hi else thr
    return best_f, best_thr


_CODES = {"gini": 0, "entropy": 1}


def _best_split(X, stats, idx, task, criterion, min_leaf):
    """Return ``(feature, threshold)`` of the best split of rows ``idx``, or ``None``.

    Every feature is swept once in sorted order. Gains within 1e-12 of each
    other count as ties, which keep the lowest feature index, then the
    lowest threshold; this makes weighted rows and duplicated rows agree.
    """
    code = 2 if task == "regression" else _CODES[criterion]
    f, thr = _split_search(X, stats, idx, code, float(min_leaf), _EPS)
    return None if f < 0 else (int(f), float(thr))


def build_tree(
    X,
    y,
    weights=None,
    *,
    task="classification",
    classes=None,
    criterion="gini",
    max_depth=None,
    min_samples_leaf=1,
    min_samples_split=2,
    seed=0,
) -> TreeModel:
    """Grow a CART tree.

    For classification ``y`` holds class labels and ``classes`` fixes the
    column order of the leaf probability vectors (defaults to the sorted
    distinct labels). For regression ``y`` is real-valued and leaves hold
    weighted means. The builder is deterministic; ``seed`` is recorded only.
    """
    X = np.ascontiguousarray(getattr(X, "values", X), dtype=float)
    n, d = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if criterion not in CRITERIA and task == "classification":
        raise ValueError(f"unknown criterion {criterion!r}, expected one of {CRITERIA}")
    if max_depth is not None and max_depth < 0:
        raise ValueError("max_depth must be >= 0 or None")

    if task == "classification":
        y_list = np.asarray(y).tolist()
        if classes is None:
            classes = sorted(set(y_list))
        classes = tuple(classes)
        lookup = {c: i for i, c in enumerate(classes)}
        y_idx = np.array([lookup[v] for v in y_list], dtype=np.int64)
        stats = np.zeros((n, len(classes)))
        stats[np.arange(n), y_idx] = w
    else:
        y = np.asarray(y, dtype=float)
        classes = ()
        center = float(np.average(y, weights=w)) if w.sum() > 0 else 0.0
        yc = y - center
        stats = np.ascontiguousarray(np.column_stack([w, w * yc, w * yc * yc]))

    feature, threshold, left, right, value, node_w, node_d = [], [], [], [], [], [], []

    def leaf_value(s):
        tot = s.sum(axis=0)
        if task == "regression":
            return np.array([center + (tot[1] / tot[0] if tot[0] > 0 else 0.0)])
        wt = tot.sum()
        return tot / wt if wt > 0 else np.full(len(classes), 1.0 / len(classes))

    def new_node(idx, depth):
        nid = len(feature)
        s = stats[idx]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(s))
        node_w.append(float(_stats_weight(s.sum(axis=0), task)))
        node_d.append(depth)
        return nid

    root = new_node(np.arange(n), 0)
    stack = [(root, np.arange(n), 0)]
    while stack:
        nid, idx, depth = stack.pop()
        if max_depth is not None and depth >= max_depth:
            continue
        if node_w[nid] < min_samples_split - _EPS:
            continue
        s = stats[idx]
        if task == "classification":
            if np.count_nonzero(s.sum(axis=0) > 0) <= 1:
                continue
        elif _node_cost(s.sum(axis=0), task, criterion) <= 1e-12 * max(1.0, node_w[nid]):
            continue
        found = _best_split(X, stats, idx, task, criterion, min_samples_leaf)
        if found is None:
            continue
        f, thr = found
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[nid], threshold[nid] = f, thr
        left[nid] = new_node(li, depth + 1)
        right[nid] = new_node(ri, depth + 1)
        # right pushed first so the left subtree is expanded first
        stack.append((right[nid], ri, depth + 1))
        stack.append((left[nid], li, depth + 1))

    return TreeModel(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value),
        node_weight=np.array(node_w),
        node_depth=np.array(node_d, dtype=np.int64),
        task=task,
        classes=classes,
        criterion=criterion if task == "classification" else "mse",
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        min_samples_split=min_samples_split,
        seed=seed,
        n_features=d,
    )


def train_tree(
    train,
    labels,
    weights=None,
    criterion="gini",
    max_depth=None,
    min_samples_leaf=1,
    min_samples_split=2,
    seed=0,
) -> TreeModel:
    """Binary CART classifier; leaves score the weighted positive-class share.

    Weights are rescaled to mean 1 first so that the leaf-size constraints
    do not depend on the overall weight scale.
    """
    X = np.asarray(getattr(train, "values", train), dtype=float)
    y = np.asarray(labels).astype(np.int64)
    n = len(y)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if X.shape[0] != n or w.shape != (n,):
        raise DimensionMismatch("train, labels and weights must have the same number of rows")
    if n == 0 or w.sum() <= 0:
        raise ValueError("need at least one row with positive weight")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    w = w * (n / w.sum())
    present = np.unique(y[w > 0])
    model = build_tree(
        X, y, w,
        task="classification",
        classes=(0, 1),
        criterion=criterion,
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        min_samples_split=min_samples_split,
        seed=seed,
    )
    if len(present) < 2:
        warnings.warn(f"only class {present.tolist()} present; tree is a single leaf", DegenerateLabels)
        model = dataclasses.replace(model, degenerate=True)
    return model
