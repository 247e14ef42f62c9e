"""Decision trees shared by the forest and boosting learners.

Split search is rank based: candidate thresholds are midpoints between consecutive
sorted unique values, so strictly increasing per-feature transforms do not change
which training rows go left.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

LEAF = -1
# gains this small relative to the children's score are floating-point noise
_RELATIVE_GAIN_EPS = 1e-9


@dataclass
class DecisionTree:
    """Flat node arrays; ``feature == -1`` marks a leaf holding ``value``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == LEAF))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index reached by each row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            current = node[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def split_features(self) -> np.ndarray:
        return self.feature[self.feature != LEAF]

    def to_state(self) -> Dict[str, List[Any]]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_state(cls, state: Dict[str, List[Any]]) -> "DecisionTree":
        return cls(
            feature=np.asarray(state["feature"], dtype=np.int64),
            threshold=np.asarray(state["threshold"], dtype=np.float64),
            left=np.asarray(state["left"], dtype=np.int64),
            right=np.asarray(state["right"], dtype=np.int64),
            value=np.asarray(state["value"], dtype=np.float64),
        )


class _NodeBuffer:
    """Growable node arrays used while a tree is being built."""

    def __init__(self) -> None:
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def add_leaf(self, value: float) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(float(value))
        return len(self.feature) - 1

    def make_split(self, node: int, feature: int, threshold: float, left: int, right: int) -> None:
        self.feature[node] = int(feature)
        self.threshold[node] = float(threshold)
        self.left[node] = left
        self.right[node] = right

    def build(self) -> DecisionTree:
        return DecisionTree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=np.float64),
        )


def _midpoint(low: float, high: float) -> float:
    mid = (low + high) / 2.0
    # adjacent floats: keep ``high`` on the right-hand side
    return low if mid >= high else mid


def _sorted_columns(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    distinct = xs[1:] > xs[:-1]
    return order, xs, distinct


# ----------------------------------------------------------------------------
# classification (CART, Gini impurity)
# ----------------------------------------------------------------------------

def _gini(positives: np.ndarray, total: np.ndarray) -> np.ndarray:
    p = positives / total
    return 2.0 * p * (1.0 - p)


def best_gini_split(X: np.ndarray, y: np.ndarray, features: Sequence[int]) -> Optional[Tuple[int, float, float]]:
    """(feature, threshold, gain) maximizing Gini decrease over ``features``.

    Zero-gain splits count as valid. Ties go to the lower feature index, then the lower threshold.
    """
    n = X.shape[0]
    features = np.asarray(features, dtype=np.int64)
    if n < 2 or features.size == 0:
        return None
    order, xs, distinct = _sorted_columns(X[:, features])
    if not distinct.any():
        return None
    ys = y[order]
    pos_left = np.cumsum(ys, axis=0)[:-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, np.newaxis]
    n_right = n - n_left
    pos_total = float(y.sum())
    weighted = (n_left * _gini(pos_left, n_left) + n_right * _gini(pos_total - pos_left, n_right)) / n
    gain = _gini(np.array(pos_total), np.array(float(n))) - weighted
    gain = np.where(distinct, gain, -np.inf)

    best_gain = gain.max()
    rows, cols = np.nonzero(gain == best_gain)
    candidates = sorted(
        (int(features[c]), _midpoint(float(xs[r, c]), float(xs[r + 1, c]))) for r, c in zip(rows, cols)
    )
    feature, threshold = candidates[0]
    return feature, threshold, float(best_gain)


def grow_classification_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, mtry: int,
                             max_depth: Optional[int] = None, min_samples_split: int = 2) -> DecisionTree:
    """Depth-first CART tree; leaves hold the fraction of class-1 rows."""
    n_features = X.shape[1]
    nodes = _NodeBuffer()
    root = nodes.add_leaf(float(y.mean()))
    stack = [(root, np.arange(X.shape[0]), 0)]

    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        if idx.size < min_samples_split or (max_depth is not None and depth >= max_depth):
            continue
        if y_node.min() == y_node.max():
            continue

        X_node = X[idx]
        permutation = rng.permutation(n_features)
        split = best_gini_split(X_node, y_node, permutation[:mtry])
        if split is None:
            for feature in permutation[mtry:]:
                split = best_gini_split(X_node, y_node, [feature])
                if split is not None:
                    break
        if split is None:
            continue

        feature, threshold, _ = split
        go_left = X_node[:, feature] <= threshold
        left_idx, right_idx = idx[go_left], idx[~go_left]
        left = nodes.add_leaf(float(y[left_idx].mean()))
        right = nodes.add_leaf(float(y[right_idx].mean()))
        nodes.make_split(node, feature, threshold, left, right)
        # right pushed first so the left subtree is numbered first
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))

    return nodes.build()


# ----------------------------------------------------------------------------
# regression on gradients (second-order boosting trees)
# ----------------------------------------------------------------------------

@dataclass
class _LeafSplit:
    gain: float
    feature: int
    threshold: float
    left_idx: np.ndarray
    right_idx: np.ndarray


def _leaf_output(G: float, H: float, lambda_l2: float) -> float:
    return -G / (H + lambda_l2)


def best_gradient_split(X: np.ndarray, g: np.ndarray, h: np.ndarray, idx: np.ndarray, min_data_in_leaf: int,
                        min_sum_hessian: float, lambda_l2: float, min_gain_to_split: float) -> Optional[_LeafSplit]:
    """Best positive-gain split of the rows ``idx`` over all features."""
    n = idx.size
    if n < 2 * min_data_in_leaf or n < 2:
        return None
    order, xs, distinct = _sorted_columns(X[idx])
    gs = g[idx][order]
    hs = h[idx][order]
    G, H = float(g[idx].sum()), float(h[idx].sum())
    GL = np.cumsum(gs, axis=0)[:-1]
    HL = np.cumsum(hs, axis=0)[:-1]
    GR, HR = G - GL, H - HL
    n_left = np.arange(1, n)[:, np.newaxis]

    children = GL * GL / (HL + lambda_l2) + GR * GR / (HR + lambda_l2)
    gain = children - G * G / (H + lambda_l2)
    valid = (
        distinct
        & (n_left >= min_data_in_leaf) & (n - n_left >= min_data_in_leaf)
        & (HL >= min_sum_hessian) & (HR >= min_sum_hessian)
        & (gain > min_gain_to_split) & (gain > _RELATIVE_GAIN_EPS * np.abs(children))
    )
    if not valid.any():
        return None
    # row-major over (feature, position): argmax keeps the lowest feature, then the lowest threshold
    flat = np.where(valid, gain, -np.inf).T.reshape(-1)
    best = int(np.argmax(flat))
    feature, position = divmod(best, n - 1)
    threshold = _midpoint(float(xs[position, feature]), float(xs[position + 1, feature]))
    go_left = X[idx, feature] <= threshold
    return _LeafSplit(float(flat[best]), feature, threshold, idx[go_left], idx[~go_left])


def grow_gradient_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, max_leaves: int = 31,
                       min_data_in_leaf: int = 2, min_sum_hessian: float = 1e-3, lambda_l2: float = 0.0,
                       min_gain_to_split: float = 0.0, max_depth: Optional[int] = None) -> DecisionTree:
    """Leaf-wise growth: always split the leaf with the largest gain next (lowest node id on ties)."""
    nodes = _NodeBuffer()
    all_rows = np.arange(X.shape[0])
    root = nodes.add_leaf(_leaf_output(float(g.sum()), float(h.sum()), lambda_l2))
    depth = {root: 0}
    pending: Dict[int, Optional[_LeafSplit]] = {}

    def candidate(node: int, idx: np.ndarray) -> Optional[_LeafSplit]:
        if max_depth is not None and depth[node] >= max_depth:
            return None
        return best_gradient_split(X, g, h, idx, min_data_in_leaf, min_sum_hessian, lambda_l2, min_gain_to_split)

    pending[root] = candidate(root, all_rows)
    n_leaves = 1
    while n_leaves < max_leaves:
        splittable = [(s.gain, -node, node) for node, s in pending.items() if s is not None]
        if not splittable:
            break
        _, _, node = max(splittable)
        split = pending.pop(node)
        assert split is not None
        left = nodes.add_leaf(_leaf_output(float(g[split.left_idx].sum()), float(h[split.left_idx].sum()), lambda_l2))
        right = nodes.add_leaf(_leaf_output(float(g[split.right_idx].sum()), float(h[split.right_idx].sum()), lambda_l2))
        nodes.make_split(node, split.feature, split.threshold, left, right)
        depth[left] = depth[right] = depth[node] + 1
        pending[left] = candidate(left, split.left_idx)
        pending[right] = candidate(right, split.right_idx)
        n_leaves += 1

    return nodes.build()
