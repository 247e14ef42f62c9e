"""Random forest of Gini CART trees with per-node feature subsampling."""

import math
from typing import Any, Dict, List, Optional

import numpy as np

from ...exceptions import ModelError
from .base_learner import BaseLearner
from .tree import DecisionTree, grow_classification_tree


def default_mtry(n_features: int) -> int:
    return max(1, int(math.floor(math.sqrt(n_features))))


class RandomForestLearner(BaseLearner):
    """Bagged CART trees; the score is the fraction of trees voting 1."""

    kind = "random_forest"

    def __init__(self, n_trees: int = 100, max_depth: Optional[int] = None, mtry: Optional[int] = None,
                 bootstrap: bool = True, min_samples_split: int = 2):
        if n_trees < 1:
            raise ModelError(f"n_trees must be >= 1, got {n_trees}", code="BAD_PARAMS")
        if max_depth is not None and max_depth < 1:
            raise ModelError(f"max_depth must be >= 1 or none, got {max_depth}", code="BAD_PARAMS")
        if mtry is not None and mtry < 1:
            raise ModelError(f"mtry must be >= 1, got {mtry}", code="BAD_PARAMS")
        if min_samples_split < 2:
            raise ModelError(f"min_samples_split must be >= 2, got {min_samples_split}", code="BAD_PARAMS")
        super().__init__(n_trees=n_trees, max_depth=max_depth, mtry=mtry, bootstrap=bootstrap,
                         min_samples_split=min_samples_split)
        self.trees: List[DecisionTree] = []
        self.mtry_used = 0

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> "RandomForestLearner":
        X, y = self.check_training_data(X, y)
        n_rows, n_features = X.shape
        mtry = self.params["mtry"] or default_mtry(n_features)
        self.mtry_used = min(mtry, n_features)
        self.trees = []
        for tree_index in range(self.params["n_trees"]):
            # per-tree generator: result does not depend on build order
            rng = np.random.default_rng([seed, tree_index])
            rows = rng.integers(0, n_rows, size=n_rows) if self.params["bootstrap"] else np.arange(n_rows)
            self.trees.append(grow_classification_tree(
                X[rows], y[rows], rng, self.mtry_used,
                max_depth=self.params["max_depth"],
                min_samples_split=self.params["min_samples_split"],
            ))
        return self

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise ModelError("random forest is not fitted", code="NOT_FITTED")
        votes = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            votes += tree.predict(X) >= 0.5
        return votes / len(self.trees)

    def to_state(self) -> Dict[str, Any]:
        return {"mtry_used": self.mtry_used, "trees": [tree.to_state() for tree in self.trees]}

    @classmethod
    def from_state(cls, params: Dict[str, Any], state: Dict[str, Any]) -> "RandomForestLearner":
        learner = cls(**params)
        learner.mtry_used = int(state["mtry_used"])
        learner.trees = [DecisionTree.from_state(tree) for tree in state["trees"]]
        return learner
