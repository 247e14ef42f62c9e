"""Gray-level co-occurrence matrix features."""

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ...exceptions import FeatureError
from ...models.volume import RoiPatch
from .base_family import FeatureFamily

Direction = Tuple[int, int, int]

# (dx, dy, dz) offsets whose first nonzero component is positive: the 13 unique 3D directions
DIRECTIONS: List[Direction] = [
    d for d in itertools.product((-1, 0, 1), repeat=3)
    if any(d) and next(c for c in d if c) > 0
]


def direction_slices(shape: Tuple[int, ...], direction: Direction) -> Optional[Tuple[tuple, tuple]]:
    """Source/target slices pairing each voxel with its neighbour, or None if no pair fits."""
    dx, dy, dz = direction
    source, target = [], []
    for size, offset in zip(shape, (dz, dy, dx)):
        if size - abs(offset) <= 0:
            return None
        source.append(slice(max(0, -offset), size - max(0, offset)))
        target.append(slice(max(0, offset), size - max(0, -offset)))
    return tuple(source), tuple(target)


def cooccurrence(levels: np.ndarray, n_levels: int, direction: Direction) -> Optional[np.ndarray]:
    """Symmetric, normalized co-occurrence probabilities for one direction."""
    slices = direction_slices(levels.shape, direction)
    if slices is None:
        return None
    a = levels[slices[0]].reshape(-1) - 1
    b = levels[slices[1]].reshape(-1) - 1
    counts = np.bincount(a * n_levels + b, minlength=n_levels * n_levels).reshape(n_levels, n_levels)
    counts = counts + counts.T
    return counts / counts.sum()


def _matrix_features(p: np.ndarray) -> Dict[str, float]:
    n = p.shape[0]
    i, j = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
    px = p.sum(axis=1)
    levels = np.arange(1, n + 1)
    mu = float(np.sum(levels * px))
    sigma = float(np.sqrt(np.sum((levels - mu) ** 2 * px)))
    nonzero = p[p > 0]
    if sigma * sigma < 1e-12:
        correlation = 1.0
    else:
        correlation = float((np.sum(i * j * p) - mu * mu) / (sigma * sigma))
    cluster = i + j - 2.0 * mu
    return {
        "JointEnergy": float(np.sum(p * p)),
        "Contrast": float(np.sum((i - j) ** 2 * p)),
        "Correlation": correlation,
        "JointEntropy": float(-np.sum(nonzero * np.log2(nonzero))),
        "InverseDifferenceMoment": float(np.sum(p / (1.0 + (i - j) ** 2))),
        "ClusterShade": float(np.sum(cluster ** 3 * p)),
        "ClusterProminence": float(np.sum(cluster ** 4 * p)),
        "MaximumProbability": float(p.max()),
    }


def glcm_features(levels: np.ndarray, n_levels: int,
                  directions: Optional[Sequence[Direction]] = None) -> Dict[str, float]:
    """Co-occurrence features at distance 1, averaged over the usable directions."""
    if n_levels < 2:
        raise FeatureError(f"n_levels must be >= 2, got {n_levels}", code="BAD_LEVELS")
    per_direction = []
    for direction in directions if directions is not None else DIRECTIONS:
        p = cooccurrence(levels, n_levels, direction)
        if p is not None:
            per_direction.append(_matrix_features(p))
    if not per_direction:
        raise FeatureError(f"grid {levels.shape[::-1]} too small for any GLCM direction", code="NO_DIRECTIONS")
    return {key: float(np.mean([f[key] for f in per_direction])) for key in per_direction[0]}


class GLCMFamily(FeatureFamily):
    """Co-occurrence texture on the discretized grid."""

    name = "glcm"
    FEATURES = (
        "JointEnergy", "Contrast", "Correlation", "JointEntropy", "InverseDifferenceMoment",
        "ClusterShade", "ClusterProminence", "MaximumProbability",
    )

    def extract(self, image: RoiPatch, levels: np.ndarray, n_levels: int) -> Dict[str, float]:
        return glcm_features(levels, n_levels)
