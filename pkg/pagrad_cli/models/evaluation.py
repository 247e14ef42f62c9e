"""Evaluation models for pagrad CLI."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


@dataclass
class FoldPlan:
    """Partition of row indices into k folds."""

    folds: List[List[int]]
    seed: int
    stratified: bool = True

    @property
    def k(self) -> int:
        return len(self.folds)

    def test_indices(self, fold: int) -> List[int]:
        return list(self.folds[fold])

    def train_indices(self, fold: int) -> List[int]:
        return sorted(i for f, members in enumerate(self.folds) if f != fold for i in members)


@dataclass
class FoldMetrics:
    """Scores of one evaluation split."""

    accuracy: float
    f1: float
    auroc: Optional[float]
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Metrics:
    """Per-fold scores plus their means; AUROC mean skips folds where it is undefined."""

    folds: List[FoldMetrics] = field(default_factory=list)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([f.accuracy for f in self.folds])) if self.folds else 0.0

    @property
    def mean_f1(self) -> float:
        return float(np.mean([f.f1 for f in self.folds])) if self.folds else 0.0

    @property
    def mean_auroc(self) -> Optional[float]:
        defined = [f.auroc for f in self.folds if f.auroc is not None]
        return float(np.mean(defined)) if defined else None

    def as_dict(self) -> Dict[str, Any]:
        return {
            "folds": [f.as_dict() for f in self.folds],
            "mean_accuracy": self.mean_accuracy,
            "mean_f1": self.mean_f1,
            "mean_auroc": self.mean_auroc,
        }
