"""Shape features of the rectangular ROI block."""

import math
from typing import Dict, Tuple

import numpy as np

from ...models.volume import RoiPatch
from .base_family import FeatureFamily


def shape_features(dims: Tuple[int, int, int], spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)) -> Dict[str, float]:
    """Volume, box surface and coordinate-PCA axis ratios for an (x, y, z) voxel block."""
    lengths = [d * s for d, s in zip(dims, spacing)]
    voxel_volume = float(np.prod(dims) * np.prod(spacing))
    lx, ly, lz = lengths
    surface = 2.0 * (lx * ly + ly * lz + lx * lz)

    axes = [np.arange(d) * s for d, s in zip(dims, spacing)]
    grid = np.stack([c.reshape(-1) for c in np.meshgrid(*axes, indexing="ij")])
    eigenvalues = np.sort(np.linalg.eigvalsh(np.cov(grid, bias=True)))[::-1]
    major, minor, least = (max(float(v), 0.0) for v in eigenvalues)
    if major == 0.0:
        elongation = flatness = 1.0
    else:
        elongation = math.sqrt(minor / major)
        flatness = math.sqrt(least / major)

    return {
        "VoxelVolume": voxel_volume,
        "SurfaceArea": surface,
        "SurfaceVolumeRatio": surface / voxel_volume,
        "Elongation": elongation,
        "Flatness": flatness,
    }


class ShapeFamily(FeatureFamily):
    """Shape descriptors, computed once on the original image."""

    name = "shape"
    FEATURES = ("VoxelVolume", "SurfaceArea", "SurfaceVolumeRatio", "Elongation", "Flatness")

    def applies_to(self, image_name: str) -> bool:
        return image_name == "original"

    def extract(self, image: RoiPatch, levels: np.ndarray, n_levels: int) -> Dict[str, float]:
        return shape_features(image.dims, image.spacing)
