"""Image filters applied to ROI patches before feature extraction."""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import ndimage

from ...exceptions import FeatureError
from ...models.volume import RoiPatch

WAVELET_SUBBANDS = ("LLL", "LLH", "LHL", "LHH", "HLL", "HLH", "HHL", "HHH")
_SQRT2 = math.sqrt(2.0)
_CENTRAL_DIFFERENCE = np.array([-0.5, 0.0, 0.5])


@dataclass(frozen=True)
class FilterKind:
    """A filter name plus its parameter (σ for ``log``)."""

    name: str
    sigma: Optional[float] = None

    def image_names(self) -> List[str]:
        if self.name == "log":
            return [log_image_name(self.sigma or 0.0)]
        if self.name == "wavelet":
            return [f"wavelet-{band}" for band in WAVELET_SUBBANDS]
        return [self.name]


def log_image_name(sigma: float) -> str:
    return "log-sigma-" + f"{float(sigma)}".replace(".", "-")


def _require_min_extent(array: np.ndarray, what: str) -> None:
    if min(array.shape) < 2:
        raise FeatureError(f"{what} needs every axis dim >= 2, got {array.shape[::-1]}", code="PATCH_TOO_SMALL")


def square(x: np.ndarray) -> np.ndarray:
    return x * x


def square_root(x: np.ndarray) -> np.ndarray:
    return np.sqrt(x - x.min())


def logarithm(x: np.ndarray) -> np.ndarray:
    return np.log1p(x - x.min())


def exponential(x: np.ndarray) -> np.ndarray:
    """exp of the patch rescaled to [0, 1]; a constant patch maps to 1."""
    span = x.max() - x.min()
    if span == 0:
        return np.ones_like(x)
    return np.exp((x - x.min()) / span)


def gradient_magnitude(x: np.ndarray) -> np.ndarray:
    """Central-difference gradient magnitude with border replication."""
    _require_min_extent(x, "gradient filter")
    total = np.zeros_like(x)
    for axis in range(3):
        g = ndimage.correlate1d(x, _CENTRAL_DIFFERENCE, axis=axis, mode="nearest")
        total += g * g
    return np.sqrt(total)


def laplacian_of_gaussian(x: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur with kernel radius ceil(3σ), then the 6-neighbour discrete Laplacian."""
    if not math.isfinite(sigma) or sigma <= 0:
        raise FeatureError(f"LoG sigma must be positive, got {sigma}", code="BAD_SIGMA")
    truncate = math.ceil(3.0 * sigma) / sigma
    blurred = ndimage.gaussian_filter(x, sigma=sigma, mode="nearest", truncate=truncate)
    return ndimage.laplace(blurred, mode="nearest")


def _haar_axis(x: np.ndarray, axis: int) -> Sequence[np.ndarray]:
    if x.shape[axis] % 2:
        pad = [(0, 0)] * x.ndim
        pad[axis] = (0, 1)
        x = np.pad(x, pad, mode="edge")
    even = np.take(x, np.arange(0, x.shape[axis], 2), axis=axis)
    odd = np.take(x, np.arange(1, x.shape[axis], 2), axis=axis)
    return (even + odd) / _SQRT2, (even - odd) / _SQRT2


def haar_subbands(x: np.ndarray) -> Dict[str, np.ndarray]:
    """Single-level orthonormal 3D Haar transform; keys are L/H letters in x, y, z order."""
    _require_min_extent(x, "wavelet filter")
    bands: Dict[str, np.ndarray] = {"": x}
    # arrays are [z, y, x]: transform x, then y, then z
    for axis in (2, 1, 0):
        next_bands: Dict[str, np.ndarray] = {}
        for key, band in bands.items():
            low, high = _haar_axis(band, axis)
            next_bands[key + "L"] = low
            next_bands[key + "H"] = high
        bands = next_bands
    return {key: bands[key] for key in WAVELET_SUBBANDS}


_POINTWISE = {
    "original": lambda x: x.copy(),
    "square": square,
    "squareroot": square_root,
    "logarithm": logarithm,
    "exponential": exponential,
    "gradient": gradient_magnitude,
}


def apply_filter(patch: RoiPatch, kind: FilterKind) -> Dict[str, RoiPatch]:
    """Filtered image(s) keyed by image name; wavelet yields 8 half-resolution subbands."""
    x = patch.array
    if kind.name in _POINTWISE:
        return {kind.name: patch.with_array(_POINTWISE[kind.name](x))}
    if kind.name == "log":
        sigma = kind.sigma if kind.sigma is not None else 0.0
        return {log_image_name(sigma): patch.with_array(laplacian_of_gaussian(x, sigma))}
    if kind.name == "wavelet":
        sx, sy, sz = patch.spacing
        halved = (2.0 * sx, 2.0 * sy, 2.0 * sz)
        return {
            f"wavelet-{key}": RoiPatch(band, patch.subject_id, patch.region, patch.label, halved)
            for key, band in haar_subbands(x).items()
        }
    raise FeatureError(f"unknown filter: {kind.name}", code="UNKNOWN_FILTER")


def enabled_filters(names: Sequence[str], log_sigmas: Sequence[float]) -> List[FilterKind]:
    """Expand configured filter names; ``log`` becomes one kind per σ."""
    kinds: List[FilterKind] = []
    for name in names:
        if name == "log":
            kinds.extend(FilterKind("log", float(sigma)) for sigma in log_sigmas)
        else:
            kinds.append(FilterKind(name))
    return kinds
