"""RBF-kernel support vector machine trained by SMO with maximal-violating-pair selection."""

from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from ...exceptions import ModelError
from ...logging_config import StructuredLogger
from .base_learner import BaseLearner

logger = StructuredLogger("svm")

_TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(A, B, metric="sqeuclidean"))


class SVMLearner(BaseLearner):
    """C-SVC on standardized features; the score is the raw decision value."""

    kind = "svm_rbf"

    def __init__(self, C: float = 1.0, gamma: Optional[float] = None, tol: float = 1e-3, max_iter: int = 100000):
        if C <= 0:
            raise ModelError(f"C must be positive, got {C}", code="BAD_PARAMS")
        if gamma is not None and gamma <= 0:
            raise ModelError(f"gamma must be positive, got {gamma}", code="BAD_PARAMS")
        if tol <= 0 or max_iter < 1:
            raise ModelError("tol must be positive and max_iter >= 1", code="BAD_PARAMS")
        super().__init__(C=C, gamma=gamma, tol=tol, max_iter=max_iter)
        self.mean = np.zeros(0)
        self.scale = np.ones(0)
        self.gamma_used = 0.0
        self.support_vectors = np.zeros((0, 0))
        self.dual_coef = np.zeros(0)
        self.rho = 0.0
        self.iterations = 0
        self.converged = False

    def threshold(self) -> float:
        return 0.0

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def fit(self, X: np.ndarray, y01: np.ndarray, seed: int) -> "SVMLearner":
        X, y01 = self.check_training_data(X, y01)
        if np.unique(y01).size < 2:
            raise ModelError("SVM training needs both classes", code="SINGLE_CLASS")
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale = np.where(std > 0, std, 1.0)
        Z = self._standardize(X)
        self.gamma_used = float(self.params["gamma"] or 1.0 / X.shape[1])

        C = float(self.params["C"])
        y = np.where(y01 == 1, 1.0, -1.0)
        K = rbf_kernel(Z, Z, self.gamma_used)
        alpha, G = self._solve(K, y, C)

        support = alpha > 0
        self.support_vectors = Z[support]
        self.dual_coef = (alpha * y)[support]
        self.rho = self._rho(alpha, G, y, C)
        logger.debug("SVM trained", support_vectors=int(support.sum()), iterations=self.iterations,
                     converged=self.converged)
        return self

    def _solve(self, K: np.ndarray, y: np.ndarray, C: float) -> Tuple[np.ndarray, np.ndarray]:
        n = y.shape[0]
        tol = float(self.params["tol"])
        alpha = np.zeros(n)
        G = -np.ones(n)
        diag = np.diag(K)
        self.converged = False
        self.iterations = 0

        for iteration in range(int(self.params["max_iter"])):
            self.iterations = iteration + 1
            up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
            low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
            violation = -y * G
            i = int(np.argmax(np.where(up, violation, -np.inf)))
            j = int(np.argmin(np.where(low, violation, np.inf)))
            if violation[i] - violation[j] < tol:
                self.converged = True
                break

            quad = max(diag[i] + diag[j] - 2.0 * K[i, j], _TAU)
            old_i, old_j = alpha[i], alpha[j]
            if y[i] != y[j]:
                delta = (-G[i] - G[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j], alpha[i] = 0.0, diff
                elif alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, -diff
                if diff > 0:
                    if alpha[i] > C:
                        alpha[i], alpha[j] = C, C - diff
                elif alpha[j] > C:
                    alpha[j], alpha[i] = C, C + diff
            else:
                delta = (G[i] - G[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if total > C:
                    if alpha[i] > C:
                        alpha[i], alpha[j] = C, total - C
                elif alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, total
                if total > C:
                    if alpha[j] > C:
                        alpha[j], alpha[i] = C, total - C
                elif alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, total

            # Q[:, t] = y * y_t * K[:, t]
            G += y * (y[i] * K[:, i] * (alpha[i] - old_i) + y[j] * K[:, j] * (alpha[j] - old_j))

        if not self.converged:
            logger.warning("SVM did not converge; using last iterate", max_iter=self.params["max_iter"])
        return alpha, G

    @staticmethod
    def _rho(alpha: np.ndarray, G: np.ndarray, y: np.ndarray, C: float) -> float:
        yG = y * G
        free = (alpha > 0) & (alpha < C)
        if free.any():
            return float(yG[free].mean())
        at_upper = alpha >= C
        upper_side = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        ub = yG[upper_side].min() if upper_side.any() else np.inf
        lb = yG[~upper_side].max() if (~upper_side).any() else -np.inf
        return float((ub + lb) / 2.0)

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        if self.mean.size == 0:
            raise ModelError("SVM is not fitted", code="NOT_FITTED")
        if self.dual_coef.size == 0:
            return np.full(X.shape[0], -self.rho)
        K = rbf_kernel(self._standardize(X), self.support_vectors, self.gamma_used)
        return K @ self.dual_coef - self.rho

    def to_state(self) -> Dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "gamma_used": self.gamma_used,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "rho": self.rho,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_state(cls, params: Dict[str, Any], state: Dict[str, Any]) -> "SVMLearner":
        learner = cls(**params)
        learner.mean = np.asarray(state["mean"], dtype=np.float64)
        learner.scale = np.asarray(state["scale"], dtype=np.float64)
        learner.gamma_used = float(state["gamma_used"])
        learner.dual_coef = np.asarray(state["dual_coef"], dtype=np.float64)
        learner.support_vectors = np.asarray(state["support_vectors"], dtype=np.float64).reshape(
            learner.dual_coef.size, learner.mean.size
        )
        learner.rho = float(state["rho"])
        learner.iterations = int(state["iterations"])
        learner.converged = bool(state["converged"])
        return learner
