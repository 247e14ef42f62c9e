"""From-scratch binary learners package."""

from .base_learner import BaseLearner
from .gbdt import GBDTLearner
from .random_forest import RandomForestLearner
from .svm import SVMLearner

__all__ = [
    'BaseLearner',
    'GBDTLearner',
    'RandomForestLearner',
    'SVMLearner',
]
