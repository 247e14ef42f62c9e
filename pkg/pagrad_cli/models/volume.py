"""Volume, ROI and phantom models for pagrad CLI."""

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..config import Region
from ..exceptions import ValidationError, VolumeError

Triple = Tuple[int, int, int]
Spacing = Tuple[float, float, float]


def _check_voxels(array: np.ndarray, what: str) -> None:
    if array.size == 0:
        raise VolumeError(f"{what} has zero voxels", code="EMPTY_VOLUME")
    if not np.all(np.isfinite(array)):
        raise VolumeError(f"{what} contains non-finite voxel values", code="NON_FINITE_VOXEL")
    if np.any(array < 0):
        raise VolumeError(f"{what} contains negative voxel values", code="NEGATIVE_VOXEL")


@dataclass(frozen=True)
class Volume3D:
    """3D intensity grid stored as a float32 array indexed [z, y, x] (x-fastest when flattened).

    Inputs are validated before the float32 cast; values beyond the float32 range are rejected
    rather than stored as infinities.
    """

    array: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        source = np.asarray(self.array)
        if source.ndim != 3:
            raise VolumeError("volume array must be 3-dimensional", code="BAD_SHAPE")
        _check_voxels(source, "volume")
        with np.errstate(over="ignore"):
            array = np.ascontiguousarray(source, dtype=np.float32)
        if not np.all(np.isfinite(array)):
            raise VolumeError("volume values exceed the float32 range", code="FLOAT32_OVERFLOW")
        if len(self.spacing) != 3 or any(not math.isfinite(s) or s <= 0 for s in self.spacing):
            raise VolumeError(f"spacing must be three positive reals, got {self.spacing}", code="BAD_SPACING")
        object.__setattr__(self, "array", array)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @classmethod
    def from_flat(cls, dims: Triple, voxels: np.ndarray, spacing: Spacing = (1.0, 1.0, 1.0)) -> "Volume3D":
        """Build a volume from (x, y, z) dims and an x-fastest flat voxel sequence."""
        x, y, z = dims
        flat = np.asarray(voxels)
        if flat.size != x * y * z:
            raise VolumeError(
                f"voxel count mismatch: dims {dims} need {x * y * z} values, got {flat.size}",
                code="VOXEL_COUNT_MISMATCH",
            )
        return cls(flat.reshape(z, y, x), spacing)

    @property
    def dims(self) -> Triple:
        z, y, x = self.array.shape
        return (x, y, z)

    @property
    def voxels(self) -> np.ndarray:
        return self.array.reshape(-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Volume3D):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.array, other.array)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class RoiSpec:
    """Axis-aligned ROI box: origin and size in (x, y, z) voxel units."""

    region: Region
    origin: Triple
    size: Triple

    def __post_init__(self) -> None:
        if any(o < 0 for o in self.origin):
            raise VolumeError(f"ROI origin must be non-negative, got {self.origin}", code="BAD_ROI")
        if any(s <= 0 for s in self.size):
            raise VolumeError(f"ROI size must be positive, got {self.size}", code="BAD_ROI")

    def fits(self, dims: Triple) -> bool:
        return all(o + s <= d for o, s, d in zip(self.origin, self.size, dims))


@dataclass(frozen=True, eq=False)
class RoiPatch:
    """Extracted ROI voxels (float64, [z, y, x]) with subject bookkeeping."""

    array: np.ndarray
    subject_id: str = ""
    region: str = "left_cistern"
    label: int = 0
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        array = np.ascontiguousarray(self.array, dtype=np.float64)
        if array.ndim != 3 or array.size == 0:
            raise VolumeError("patch must be a non-empty 3D array", code="BAD_SHAPE")
        if not np.all(np.isfinite(array)):
            raise VolumeError("patch contains non-finite voxel values", code="NON_FINITE_VOXEL")
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label}", code="BAD_LABEL")
        object.__setattr__(self, "array", array)

    @property
    def dims(self) -> Triple:
        z, y, x = self.array.shape
        return (x, y, z)

    @property
    def voxels(self) -> np.ndarray:
        return self.array.reshape(-1)

    def with_array(self, array: np.ndarray) -> "RoiPatch":
        """Copy of this patch with new voxel data and the same bookkeeping."""
        return replace(self, array=array)


class PhantomConfig(BaseModel):
    """Seeded synthetic cohort parameters."""

    n_per_group: int = Field(default=20, ge=2)
    roi_dims: Tuple[int, int, int] = (8, 8, 16)
    snr: float = Field(default=4.0, ge=0.0)
    seed: int = Field(default=7, ge=0, lt=2**64)

    @field_validator("roi_dims")
    @classmethod
    def _check_dims(cls, value: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(d <= 0 for d in value):
            raise ValueError("ROI dims must be positive")
        if value[2] < 4:
            raise ValueError("ROI dz must be at least 4 for MI histograms")
        return value


@dataclass
class ManifestRow:
    """One (subject, region) entry of a cohort manifest."""

    subject_id: str
    label: int
    region: Region
    volume_path: Path
    roi_origin: Triple
    roi_size: Triple

    @property
    def roi(self) -> RoiSpec:
        return RoiSpec(region=self.region, origin=self.roi_origin, size=self.roi_size)
