"""Seeded bagged regression trees.

Each tree is grown greedily by variance reduction on a bootstrap resample
(with replacement, same size as the training set), considering every
feature at every split, to a maximum depth with a minimum of two samples to
split. The ensemble prediction is the mean of the tree outputs. Everything
is deterministic given (data, seed): tree t draws its bootstrap from a
stream seeded by (seed, t), so parallel and sequential training agree
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_N_TREES = 150
DEFAULT_MAX_DEPTH = 6
MIN_SAMPLES_SPLIT = 2


@dataclass(frozen=True)
class TreeNode:
    # Leaf iff feature < 0; then value holds the mean target.
    feature: int
    threshold: float
    left: "TreeNode | None"
    right: "TreeNode | None"
    value: float

    def predict_one(self, x: np.ndarray) -> float:
        node = self
        while node.feature >= 0:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.value


def _best_split(X: np.ndarray, y: np.ndarray) -> tuple[int, float] | None:
    """Return the (feature, threshold) minimizing the children's summed SSE.

    Ties break on the lowest feature index, then the lowest threshold, so
    the grown tree is independent of evaluation order.
    """
    n, d = X.shape
    if n < 2:
        return None
    # Sort every feature column at once; prefix sums then give every
    # candidate split's children SSE in a single vectorized pass.
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)[:-1]
    csum_sq = np.cumsum(ys * ys, axis=0)[:-1]
    total = csum[-1] + ys[-1]
    total_sq = csum_sq[-1] + ys[-1] ** 2
    nl = np.arange(1, n)[:, None]
    scores = (csum_sq - csum ** 2 / nl) + (total_sq - csum_sq) - (total - csum) ** 2 / (n - nl)
    scores[xs[:-1] == xs[1:]] = np.inf
    # Column-major scan so ties break on the lowest feature index, then the
    # lowest threshold within a feature.
    flat = int(np.argmin(scores.T))
    j, i = divmod(flat, n - 1)
    if not np.isfinite(scores[i, j]):
        return None
    return j, float(xs[i, j] + xs[i + 1, j]) / 2.0


def _grow(X: np.ndarray, y: np.ndarray, depth: int, max_depth: int) -> TreeNode:
    if (depth >= max_depth or len(y) < MIN_SAMPLES_SPLIT
            or np.all(y == y[0])):
        return TreeNode(-1, 0.0, None, None, float(np.mean(y)))
    split = _best_split(X, y)
    if split is None:
        return TreeNode(-1, 0.0, None, None, float(np.mean(y)))
    j, thr = split
    mask = X[:, j] <= thr
    left = _grow(X[mask], y[mask], depth + 1, max_depth)
    right = _grow(X[~mask], y[~mask], depth + 1, max_depth)
    return TreeNode(j, thr, left, right, float(np.mean(y)))


@dataclass(frozen=True)
class BaggedTrees:
    trees: tuple[TreeNode, ...]
    seed: int
    max_depth: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(len(X))
        for i, x in enumerate(X):
            out[i] = sum(t.predict_one(x) for t in self.trees) / len(self.trees)
        return out


def fit_bagged_trees(X: np.ndarray, y: np.ndarray, n_trees: int = DEFAULT_N_TREES,
                     max_depth: int = DEFAULT_MAX_DEPTH, seed: int = 0) -> BaggedTrees:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        idx = rng.integers(0, n, size=n)
        trees.append(_grow(X[idx], y[idx], 0, max_depth))
    return BaggedTrees(trees=tuple(trees), seed=seed, max_depth=max_depth)


# --- persistence (round-trip exact via repr'd floats) --------------------------

def _node_to_obj(node: TreeNode) -> dict:
    if node.feature < 0:
        return {"v": node.value}
    return {"f": node.feature, "t": node.threshold,
            "l": _node_to_obj(node.left), "r": _node_to_obj(node.right),
            "v": node.value}


def _node_from_obj(obj: dict) -> TreeNode:
    if "f" not in obj:
        return TreeNode(-1, 0.0, None, None, obj["v"])
    return TreeNode(obj["f"], obj["t"],
                    _node_from_obj(obj["l"]), _node_from_obj(obj["r"]), obj["v"])


def dump_trees(model: BaggedTrees) -> dict:
    return {"seed": model.seed, "max_depth": model.max_depth,
            "trees": [_node_to_obj(t) for t in model.trees]}


def load_trees(obj: dict) -> BaggedTrees:
    return BaggedTrees(trees=tuple(_node_from_obj(t) for t in obj["trees"]),
                       seed=obj["seed"], max_depth=obj["max_depth"])
