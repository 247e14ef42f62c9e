"""Fixed bin-count gray-level discretization."""

import numpy as np

from ...exceptions import FeatureError


def discretize(values: np.ndarray, n_bins: int = 32) -> np.ndarray:
    """Right-closed equal-width bins over [min, max] mapped to levels 1..n_bins.

    The maximum always lands in level ``n_bins``; a constant input is all level 1.
    """
    if n_bins < 2:
        raise FeatureError(f"n_bins must be >= 2, got {n_bins}", code="BAD_BINS")
    x = np.asarray(values, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.ones(x.shape, dtype=np.int64)
    levels = np.ceil(n_bins * (x - lo) / (hi - lo)).astype(np.int64)
    return np.clip(levels, 1, n_bins)
