"""Gradient-boosted decision trees on the logistic loss, grown leaf-wise."""

import math
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.special import expit

from ...exceptions import ModelError
from .base_learner import BaseLearner
from .tree import DecisionTree, grow_gradient_tree

_PROB_CLIP = 1e-15


def log_loss(y: np.ndarray, raw: np.ndarray) -> float:
    p = np.clip(expit(raw), _PROB_CLIP, 1.0 - _PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1.0 - p)))


class GBDTLearner(BaseLearner):
    """Newton-step boosting: leaf value -G/(H + λ) scaled by the learning rate."""

    kind = "gbdt"

    def __init__(self, learning_rate: float = 0.01, n_trees: int = 1000, max_leaves: int = 31,
                 min_data_in_leaf: int = 2, min_sum_hessian_in_leaf: float = 1e-3, lambda_l2: float = 0.0,
                 min_gain_to_split: float = 0.0, max_depth: Optional[int] = None):
        if learning_rate < 0 or not math.isfinite(learning_rate):
            raise ModelError(f"learning_rate must be >= 0, got {learning_rate}", code="BAD_PARAMS")
        if n_trees < 0 or max_leaves < 2 or min_data_in_leaf < 1:
            raise ModelError("need n_trees >= 0, max_leaves >= 2 and min_data_in_leaf >= 1", code="BAD_PARAMS")
        if min_sum_hessian_in_leaf < 0 or lambda_l2 < 0 or min_gain_to_split < 0:
            raise ModelError("hessian, lambda and gain limits must be non-negative", code="BAD_PARAMS")
        if max_depth is not None and max_depth < 1:
            raise ModelError(f"max_depth must be >= 1 or none, got {max_depth}", code="BAD_PARAMS")
        super().__init__(learning_rate=learning_rate, n_trees=n_trees, max_leaves=max_leaves,
                         min_data_in_leaf=min_data_in_leaf, min_sum_hessian_in_leaf=min_sum_hessian_in_leaf,
                         lambda_l2=lambda_l2, min_gain_to_split=min_gain_to_split, max_depth=max_depth)
        self.init_score = 0.0
        self.trees: List[DecisionTree] = []
        self.loss_trace: List[float] = []
        self.fitted = False

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> "GBDTLearner":
        X, y = self.check_training_data(X, y)
        prior = float(y.mean())
        if prior in (0.0, 1.0):
            raise ModelError("GBDT training needs both classes", code="SINGLE_CLASS")
        self.init_score = math.log(prior / (1.0 - prior))
        raw = np.full(X.shape[0], self.init_score)
        self.trees = []
        self.loss_trace = [log_loss(y, raw)]

        lr = float(self.params["learning_rate"])
        n_trees = int(self.params["n_trees"]) if lr > 0 else 0
        for _ in range(n_trees):
            p = expit(raw)
            tree = grow_gradient_tree(
                X, p - y, p * (1.0 - p),
                max_leaves=self.params["max_leaves"],
                min_data_in_leaf=self.params["min_data_in_leaf"],
                min_sum_hessian=self.params["min_sum_hessian_in_leaf"],
                lambda_l2=self.params["lambda_l2"],
                min_gain_to_split=self.params["min_gain_to_split"],
                max_depth=self.params["max_depth"],
            )
            if tree.n_leaves < 2:
                # no leaf admits a positive-gain split; further rounds would repeat this
                break
            tree.value = tree.value * lr
            raw = raw + tree.predict(X)
            self.trees.append(tree)
            self.loss_trace.append(log_loss(y, raw))
        self.fitted = True
        return self

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        raw = np.full(X.shape[0], self.init_score)
        for tree in self.trees:
            raw += tree.predict(X)
        return raw

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise ModelError("GBDT is not fitted", code="NOT_FITTED")
        return expit(self.raw_scores(X))

    def split_counts(self, n_features: int) -> np.ndarray:
        counts = np.zeros(n_features, dtype=np.int64)
        for tree in self.trees:
            np.add.at(counts, tree.split_features(), 1)
        return counts

    def to_state(self) -> Dict[str, Any]:
        return {
            "init_score": self.init_score,
            "loss_trace": list(self.loss_trace),
            "trees": [tree.to_state() for tree in self.trees],
        }

    @classmethod
    def from_state(cls, params: Dict[str, Any], state: Dict[str, Any]) -> "GBDTLearner":
        learner = cls(**params)
        learner.init_score = float(state["init_score"])
        learner.loss_trace = [float(v) for v in state["loss_trace"]]
        learner.trees = [DecisionTree.from_state(tree) for tree in state["trees"]]
        learner.fitted = True
        return learner
