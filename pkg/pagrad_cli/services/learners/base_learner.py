"""Base class for binary classifiers."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple

import numpy as np

from ...exceptions import ModelError


class BaseLearner(ABC):
    """Abstract base class for the from-scratch binary learners."""

    kind: str = ""

    def __init__(self, **params: Any):
        self.params: Dict[str, Any] = params

    @abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> "BaseLearner":
        """Fit on a float matrix and 0/1 labels; deterministic given ``seed``."""
        pass

    @abstractmethod
    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        """Real-valued ranking scores (higher means more likely class 1)."""
        pass

    @abstractmethod
    def to_state(self) -> Dict[str, Any]:
        """JSON-ready learned state."""
        pass

    @classmethod
    @abstractmethod
    def from_state(cls, params: Dict[str, Any], state: Dict[str, Any]) -> "BaseLearner":
        """Rebuild a fitted learner from ``to_state`` output."""
        pass

    def threshold(self) -> float:
        """Score at or above which a row is labelled 1."""
        return 0.5

    def predict(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(labels, scores) for each row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
        scores = self.decision_scores(X)
        return (scores >= self.threshold()).astype(np.int64), scores

    @staticmethod
    def check_training_data(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ModelError(f"training matrix {X.shape} does not match {y.shape[0]} labels", code="BAD_SHAPE")
        if X.shape[0] == 0 or X.shape[1] == 0:
            raise ModelError("training data must have at least one row and one feature", code="EMPTY_TRAINING")
        return X, y
