"""Gray-level run-length matrix features."""

from typing import Dict, Optional, Sequence

import numpy as np

from ...exceptions import FeatureError
from ...models.volume import RoiPatch
from .base_family import FeatureFamily
from .glcm import DIRECTIONS, Direction


def run_length_matrix(levels: np.ndarray, n_levels: int, direction: Direction) -> Optional[np.ndarray]:
    """Counts R[level - 1, length - 1] of maximal runs along ``direction``.

    Returns None when the grid is flat along a moving axis (every run would have length 1).
    """
    dx, dy, dz = direction
    offsets = np.array([dz, dy, dx])
    shape = levels.shape
    if any(size < 2 for size, o in zip(shape, offsets) if o):
        return None

    coords = np.indices(shape).reshape(3, -1)
    back_steps = [
        coords[axis] if offsets[axis] > 0 else shape[axis] - 1 - coords[axis]
        for axis in range(3) if offsets[axis]
    ]
    step = np.min(back_steps, axis=0)
    start = coords - step * offsets[:, np.newaxis]
    line_id = np.ravel_multi_index(tuple(start), shape)

    order = np.lexsort((step, line_id))
    line_sorted = line_id[order]
    level_sorted = levels.reshape(-1)[order]
    boundary = np.ones(order.size, dtype=bool)
    boundary[1:] = (line_sorted[1:] != line_sorted[:-1]) | (level_sorted[1:] != level_sorted[:-1])
    run_starts = np.flatnonzero(boundary)
    lengths = np.diff(np.append(run_starts, order.size))

    matrix = np.zeros((n_levels, int(lengths.max())), dtype=np.float64)
    np.add.at(matrix, (level_sorted[run_starts] - 1, lengths - 1), 1.0)
    return matrix


def _matrix_features(matrix: np.ndarray, n_voxels: int) -> Dict[str, float]:
    n_runs = matrix.sum()
    i = np.arange(1, matrix.shape[0] + 1, dtype=np.float64)[:, np.newaxis]
    j = np.arange(1, matrix.shape[1] + 1, dtype=np.float64)[np.newaxis, :]
    return {
        "ShortRunEmphasis": float(np.sum(matrix / (j * j)) / n_runs),
        "LongRunEmphasis": float(np.sum(matrix * j * j) / n_runs),
        "GrayLevelNonUniformity": float(np.sum(matrix.sum(axis=1) ** 2) / n_runs),
        "RunLengthNonUniformity": float(np.sum(matrix.sum(axis=0) ** 2) / n_runs),
        "RunPercentage": float(n_runs / n_voxels),
        "ShortRunLowGrayLevelEmphasis": float(np.sum(matrix / (i * i * j * j)) / n_runs),
    }


def glrlm_features(levels: np.ndarray, n_levels: int,
                   directions: Optional[Sequence[Direction]] = None) -> Dict[str, float]:
    """Run-length features averaged over the usable directions."""
    if n_levels < 2:
        raise FeatureError(f"n_levels must be >= 2, got {n_levels}", code="BAD_LEVELS")
    per_direction = []
    for direction in directions if directions is not None else DIRECTIONS:
        matrix = run_length_matrix(levels, n_levels, direction)
        if matrix is not None:
            per_direction.append(_matrix_features(matrix, levels.size))
    if not per_direction:
        raise FeatureError(f"grid {levels.shape[::-1]} too small for any GLRLM direction", code="NO_DIRECTIONS")
    return {key: float(np.mean([f[key] for f in per_direction])) for key in per_direction[0]}


class GLRLMFamily(FeatureFamily):
    """Run-length texture on the discretized grid."""

    name = "glrlm"
    FEATURES = (
        "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity", "RunLengthNonUniformity",
        "RunPercentage", "ShortRunLowGrayLevelEmphasis",
    )

    def extract(self, image: RoiPatch, levels: np.ndarray, n_levels: int) -> Dict[str, float]:
        return glrlm_features(levels, n_levels)
