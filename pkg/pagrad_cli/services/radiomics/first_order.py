"""First-order intensity statistics."""

from typing import Dict

import numpy as np
from scipy import stats

from ...models.volume import RoiPatch
from .base_family import FeatureFamily
from .discretization import discretize

ENTROPY_BINS = 32


def first_order_features(values: np.ndarray, entropy_bins: int = ENTROPY_BINS) -> Dict[str, float]:
    """Population moments, percentiles and histogram entropy of a voxel sample."""
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    mean = x.mean()
    variance = float(np.mean((x - mean) ** 2))
    constant = x.max() == x.min()

    p10, p25, median, p75, p90 = np.percentile(x, [10, 25, 50, 75, 90])
    robust = x[(x >= p10) & (x <= p90)]

    counts = np.bincount(discretize(x, entropy_bins), minlength=entropy_bins + 1)[1:]
    p = counts[counts > 0] / x.size
    entropy = float(-np.sum(p * np.log2(p))) if not constant else 0.0

    return {
        "Mean": float(mean),
        "Median": float(median),
        "Variance": variance,
        "Skewness": 0.0 if constant else float(stats.skew(x, bias=True)),
        "Kurtosis": 0.0 if constant else float(stats.kurtosis(x, fisher=False, bias=True)),
        "Energy": float(np.sum(x * x)),
        "Entropy": entropy,
        "Minimum": float(x.min()),
        "Maximum": float(x.max()),
        "Range": float(x.max() - x.min()),
        "MeanAbsoluteDeviation": float(np.mean(np.abs(x - mean))),
        "RobustMeanAbsoluteDeviation": float(np.mean(np.abs(robust - robust.mean()))),
        "RootMeanSquared": float(np.sqrt(np.mean(x * x))),
        "Percentile10": float(p10),
        "Percentile90": float(p90),
        "InterquartileRange": float(p75 - p25),
    }


class FirstOrderFamily(FeatureFamily):
    """First-order statistics on the filtered (not discretized) intensities."""

    name = "firstorder"
    FEATURES = (
        "Mean", "Median", "Variance", "Skewness", "Kurtosis", "Energy", "Entropy", "Minimum",
        "Maximum", "Range", "MeanAbsoluteDeviation", "RobustMeanAbsoluteDeviation",
        "RootMeanSquared", "Percentile10", "Percentile90", "InterquartileRange",
    )

    def __init__(self, entropy_bins: int = ENTROPY_BINS):
        self.entropy_bins = entropy_bins

    def extract(self, image: RoiPatch, levels: np.ndarray, n_levels: int) -> Dict[str, float]:
        return first_order_features(image.array, self.entropy_bins)
