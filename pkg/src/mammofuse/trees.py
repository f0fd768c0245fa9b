"""CART decision trees and a bagged random forest, built from scratch.

Trees minimize Gini impurity, draw floor(sqrt(p)) candidate features per
split, and stop on depth, node size or purity. Split thresholds are stored
as the largest left-going value with a ``<=`` routing rule, so building
and prediction agree exactly in floating point. All randomness flows from
the SeedSequence handed to ``RandomForestModel.fit``; trees are therefore
bit-identical across runs with the same seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class _Tree:
    feature: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    threshold: np.ndarray = field(default_factory=lambda: np.zeros(0))
    left: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    right: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    value: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "_Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
        )


class _TreeBuilder:
    def __init__(self, X, y, rng, max_depth, min_leaf, mtry):
        self.X = X
        self.y = y
        self.rng = rng
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.mtry = mtry
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _alloc(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _best_split(self, idx: np.ndarray):
        m = idx.size
        feats = np.sort(self.rng.choice(self.X.shape[1], size=self.mtry, replace=False))
        sub = self.X[np.ix_(idx, feats)]
        ys = self.y[idx].astype(np.float64)

        order = np.argsort(sub, axis=0, kind="stable")
        sorted_x = np.take_along_axis(sub, order, axis=0)
        sorted_y = ys[order]

        left_pos = np.cumsum(sorted_y, axis=0)[:-1]
        left_n = np.arange(1, m, dtype=np.float64)[:, None]
        right_n = m - left_n
        total_pos = ys.sum()
        right_pos = total_pos - left_pos

        # Weighted Gini up to constants: n_side - (pos^2 + neg^2)/n_side.
        score = (
            left_n
            - (left_pos**2 + (left_n - left_pos) ** 2) / left_n
            + right_n
            - (right_pos**2 + (right_n - right_pos) ** 2) / right_n
        )
        valid = (
            (sorted_x[:-1] < sorted_x[1:])
            & (left_n >= self.min_leaf)
            & (right_n >= self.min_leaf)
        )
        score = np.where(valid, score, np.inf)
        flat = int(np.argmin(score))
        if not np.isfinite(score.flat[flat]):
            return None
        pos, f = np.unravel_index(flat, score.shape)
        feat = int(feats[f])
        thr = float(sorted_x[pos, f])  # route left on X[:, feat] <= thr
        return feat, thr

    def grow(self, idx: np.ndarray, depth: int) -> int:
        node = self._alloc()
        ys = self.y[idx]
        pos = int(ys.sum())
        m = idx.size
        self.value[node] = pos / m

        if depth >= self.max_depth or m < 2 * self.min_leaf or pos == 0 or pos == m:
            return node
        split = self._best_split(idx)
        if split is None:
            return node
        feat, thr = split
        self.feature[node] = feat
        self.threshold[node] = thr
        mask = self.X[idx, feat] <= thr
        self.left[node] = self.grow(idx[mask], depth + 1)
        self.right[node] = self.grow(idx[~mask], depth + 1)
        return node

    def build(self) -> _Tree:
        self.grow(np.arange(self.X.shape[0]), 0)
        return _Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=np.float64),
        )


def _tree_predict(tree: _Tree, X: np.ndarray) -> np.ndarray:
    nodes = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        internal = tree.left[nodes] >= 0
        if not internal.any():
            break
        cur = nodes[internal]
        go_left = X[internal, tree.feature[cur]] <= tree.threshold[cur]
        nodes[internal] = np.where(go_left, tree.left[cur], tree.right[cur])
    return tree.value[nodes]


class RandomForestModel:
    """Bootstrap-bagged CART forest; probability is the mean over trees of
    the leaf positive fraction."""

    kind = "rf"

    def __init__(self, n_trees: int = 200, max_depth: int = 12, min_leaf: int = 5):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.trees: list[_Tree] = []

    def fit(self, X: np.ndarray, y: np.ndarray, seedseq: np.random.SeedSequence) -> "RandomForestModel":
        n, p = X.shape
        mtry = max(1, int(np.sqrt(p)))
        self.trees = []
        for child in seedseq.spawn(self.n_trees):
            rng = np.random.default_rng(child)
            idx = rng.integers(0, n, size=n)
            builder = _TreeBuilder(X[idx], y[idx], rng, self.max_depth, self.min_leaf, mtry)
            self.trees.append(builder.build())
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += _tree_predict(tree, X)
        return acc / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestModel":
        model = cls(n_trees=d["n_trees"], max_depth=d["max_depth"], min_leaf=d["min_leaf"])
        model.trees = [_Tree.from_dict(t) for t in d["trees"]]
        return model
