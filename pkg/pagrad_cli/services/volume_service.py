"""Volume I/O, ROI extraction, intensity normalization and resampling."""

import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import ndimage

from ..config import REGIONS
from ..exceptions import VolumeError
from ..logging_config import StructuredLogger
from ..models.volume import ManifestRow, RoiPatch, RoiSpec, Spacing, Triple, Volume3D

logger = StructuredLogger("volume_service")

HEADER_DTYPE = "f32le"
MANIFEST_COLUMNS = ["subject_id", "label", "region", "volume_path", "roi_origin", "roi_size"]
_INTERPOLATION_ORDER = {"nearest": 0, "trilinear": 1, "cubic_bspline": 3}


def _parse_triple(raw: str, cast: type, what: str, source: str) -> tuple:
    parts = [p.strip() for p in raw.replace(";", ",").split(",") if p.strip()]
    if len(parts) != 3:
        raise VolumeError(f"{source}: {what} needs three values, got '{raw}'", code="BAD_HEADER")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError as e:
        raise VolumeError(f"{source}: cannot parse {what} '{raw}'", code="BAD_HEADER") from e


def _read_header(path: Path) -> Dict[str, str]:
    header: Dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise VolumeError(f"{path}:{lineno}: expected key=value", code="BAD_HEADER")
        key, value = (part.strip() for part in line.split("=", 1))
        header[key] = value
    missing = [k for k in ("dims", "spacing", "dtype", "data") if k not in header]
    if missing:
        raise VolumeError(f"{path}: header is missing {', '.join(missing)}", code="BAD_HEADER")
    return header


def load_volume(path: Path) -> Volume3D:
    """Read a key=value header and its raw little-endian float32 payload."""
    path = Path(path)
    if not path.exists():
        raise VolumeError(f"Volume header not found: {path}", code="FILE_NOT_FOUND")
    header = _read_header(path)
    if header["dtype"] != HEADER_DTYPE:
        raise VolumeError(f"{path}: unsupported dtype '{header['dtype']}'", code="BAD_HEADER")

    dims = _parse_triple(header["dims"], int, "dims", str(path))
    spacing = _parse_triple(header["spacing"], float, "spacing", str(path))
    if any(d <= 0 for d in dims):
        raise VolumeError(f"{path}: dims must be positive, got {dims}", code="BAD_HEADER")

    data_path = path.parent / header["data"]
    if not data_path.exists():
        raise VolumeError(f"Volume data not found: {data_path}", code="FILE_NOT_FOUND")
    payload = data_path.read_bytes()
    expected = dims[0] * dims[1] * dims[2]
    if len(payload) % 4 != 0 or len(payload) // 4 != expected:
        raise VolumeError(
            f"voxel count mismatch: {path} declares {expected} voxels, payload holds {len(payload) / 4:g}",
            code="VOXEL_COUNT_MISMATCH",
        )
    voxels = np.frombuffer(payload, dtype="<f4")
    volume = Volume3D.from_flat(dims, voxels, spacing)
    logger.debug("Loaded volume", path=str(path), dims=dims)
    return volume


def save_volume(volume: Volume3D, path: Path) -> None:
    """Write ``<path>`` (header) and ``<stem>.raw`` (payload) next to it."""
    path = Path(path)
    if volume.array.size == 0:
        raise VolumeError("refusing to write a zero-voxel volume", code="EMPTY_VOLUME")
    data_path = path.with_suffix(".raw")
    x, y, z = volume.dims
    header = "\n".join([
        f"dims={x},{y},{z}",
        "spacing=" + ",".join(repr(float(s)) for s in volume.spacing),
        f"dtype={HEADER_DTYPE}",
        f"data={data_path.name}",
        "",
    ])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        data_path.write_bytes(volume.array.astype("<f4").tobytes())
        path.write_text(header, encoding="utf-8")
    except OSError as e:
        raise VolumeError(f"Cannot write volume to {path}: {e}", code="WRITE_FAILED") from e


def extract_roi(volume: Volume3D, spec: RoiSpec, subject_id: str = "", label: int = 0) -> RoiPatch:
    """Copy the axis-aligned sub-block at ``spec.origin`` of ``spec.size``."""
    if not spec.fits(volume.dims):
        raise VolumeError(
            f"ROI origin {spec.origin} + size {spec.size} exceeds volume dims {volume.dims}",
            code="ROI_OUT_OF_BOUNDS",
        )
    (x0, y0, z0), (dx, dy, dz) = spec.origin, spec.size
    block = volume.array[z0:z0 + dz, y0:y0 + dy, x0:x0 + dx]
    return RoiPatch(
        array=block.astype(np.float64),
        subject_id=subject_id,
        region=spec.region,
        label=label,
        spacing=volume.spacing,
    )


def normalize_max(patch: RoiPatch) -> RoiPatch:
    """I / max(I); the max voxel becomes exactly 1."""
    peak = float(patch.array.max())
    if peak <= 0:
        raise VolumeError(f"degenerate patch {patch.subject_id}: no voxel above zero", code="DEGENERATE_PATCH")
    return patch.with_array(patch.array / peak)


def zscore_normalize(patch: RoiPatch) -> RoiPatch:
    """(I - mean) / population std."""
    mean = float(patch.array.mean())
    std = float(patch.array.std())
    if std == 0.0:
        raise VolumeError(f"zero variance in patch {patch.subject_id}", code="ZERO_VARIANCE")
    return patch.with_array((patch.array - mean) / std)


def resampled_dims(dims: Triple, spacing: Spacing, target: Spacing) -> Triple:
    return tuple(max(1, int(math.floor(d * s / t + 0.5))) for d, s, t in zip(dims, spacing, target))  # type: ignore[return-value]


def _resample_array(array: np.ndarray, spacing: Spacing, target: Spacing, method: str) -> np.ndarray:
    if method not in _INTERPOLATION_ORDER:
        raise VolumeError(f"unknown resampling method '{method}'", code="BAD_METHOD")
    z, y, x = array.shape
    new_x, new_y, new_z = resampled_dims((x, y, z), spacing, target)
    # output index i samples input coordinate i * target / spacing (shared origin)
    axes = [
        np.arange(n) * (t / s)
        for n, t, s in ((new_z, target[2], spacing[2]), (new_y, target[1], spacing[1]), (new_x, target[0], spacing[0]))
    ]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"))
    order = _INTERPOLATION_ORDER[method]
    out = ndimage.map_coordinates(
        array.astype(np.float64), coords, order=order, mode="nearest", prefilter=order > 1
    )
    return out


def resample(volume: Volume3D, target_spacing: Spacing, method: str = "cubic_bspline") -> Volume3D:
    """Resample to ``target_spacing``; out-of-support samples clamp to the border."""
    if len(target_spacing) != 3 or any(not math.isfinite(t) or t <= 0 for t in target_spacing):
        raise VolumeError(f"target spacing must be positive, got {target_spacing}", code="BAD_SPACING")
    target = tuple(float(t) for t in target_spacing)
    if target == volume.spacing:
        return Volume3D(volume.array.copy(), volume.spacing)
    out = _resample_array(volume.array, volume.spacing, target, method)  # type: ignore[arg-type]
    # cubic splines can undershoot below zero near edges
    return Volume3D(np.clip(out, 0.0, None), target)  # type: ignore[arg-type]


def resample_patch(patch: RoiPatch, target_spacing: Spacing, method: str = "cubic_bspline") -> RoiPatch:
    """Resample an extracted ROI (values may be any sign, so no clipping)."""
    target = tuple(float(t) for t in target_spacing)
    if any(t <= 0 for t in target):
        raise VolumeError(f"target spacing must be positive, got {target_spacing}", code="BAD_SPACING")
    if target == tuple(patch.spacing):
        return patch
    out = _resample_array(patch.array, patch.spacing, target, method)  # type: ignore[arg-type]
    return RoiPatch(array=out, subject_id=patch.subject_id, region=patch.region,
                    label=patch.label, spacing=target)  # type: ignore[arg-type]


def _format_triple(values: Sequence[int]) -> str:
    return ";".join(str(int(v)) for v in values)


def load_manifest(path: Path) -> List[ManifestRow]:
    """Read the cohort manifest CSV; volume paths resolve against the manifest directory."""
    path = Path(path)
    if not path.exists():
        raise VolumeError(f"Manifest not found: {path}", code="FILE_NOT_FOUND")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise VolumeError(f"Cannot parse manifest {path}: {e}", code="BAD_MANIFEST") from e
    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise VolumeError(f"{path}: manifest is missing columns {', '.join(missing)}", code="BAD_MANIFEST")

    rows: List[ManifestRow] = []
    seen = set()
    for lineno, record in enumerate(frame.to_dict("records"), start=2):
        where = f"{path}:{lineno}"
        if record["label"] not in ("0", "1"):
            raise VolumeError(f"{where}: label must be 0 or 1, got '{record['label']}'", code="BAD_MANIFEST")
        if record["region"] not in REGIONS:
            raise VolumeError(f"{where}: unknown region '{record['region']}'", code="BAD_MANIFEST")
        key = (record["subject_id"], record["region"])
        if key in seen:
            raise VolumeError(f"{where}: duplicate subject/region {key}", code="BAD_MANIFEST")
        seen.add(key)
        volume_path = Path(record["volume_path"])
        if not volume_path.is_absolute():
            volume_path = path.parent / volume_path
        rows.append(ManifestRow(
            subject_id=record["subject_id"],
            label=int(record["label"]),
            region=record["region"],  # type: ignore[arg-type]
            volume_path=volume_path,
            roi_origin=_parse_triple(record["roi_origin"], int, "roi_origin", where),  # type: ignore[arg-type]
            roi_size=_parse_triple(record["roi_size"], int, "roi_size", where),  # type: ignore[arg-type]
        ))
    logger.info("Loaded manifest", path=str(path), rows=len(rows))
    return rows


def write_manifest(rows: Sequence[ManifestRow], path: Path) -> None:
    """Write manifest rows; volume paths are stored relative to the manifest when possible."""
    path = Path(path)
    records = []
    for row in rows:
        try:
            volume_path = row.volume_path.relative_to(path.parent)
        except ValueError:
            volume_path = row.volume_path
        records.append({
            "subject_id": row.subject_id,
            "label": row.label,
            "region": row.region,
            "volume_path": volume_path.as_posix(),
            "roi_origin": _format_triple(row.roi_origin),
            "roi_size": _format_triple(row.roi_size),
        })
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(records, columns=MANIFEST_COLUMNS).to_csv(path, index=False, lineterminator="\n")


class VolumeService:
    """Turns manifest rows into ROI patches, caching each volume file once."""

    def __init__(self, resample_spacing: Optional[Spacing] = None, resample_method: str = "cubic_bspline"):
        self.resample_spacing = resample_spacing
        self.resample_method = resample_method
        self._cache: Dict[Path, Volume3D] = {}

    def volume(self, path: Path) -> Volume3D:
        if path not in self._cache:
            self._cache[path] = load_volume(path)
        return self._cache[path]

    def patch(self, row: ManifestRow) -> RoiPatch:
        patch = extract_roi(self.volume(row.volume_path), row.roi, subject_id=row.subject_id, label=row.label)
        if self.resample_spacing is not None:
            patch = resample_patch(patch, self.resample_spacing, self.resample_method)
        return patch

    def region_patches(self, rows: Sequence[ManifestRow], region: str) -> List[RoiPatch]:
        """Patches of one region sorted by subject id."""
        selected = sorted((r for r in rows if r.region == region), key=lambda r: r.subject_id)
        if not selected:
            raise VolumeError(f"manifest has no rows for region '{region}'", code="EMPTY_REGION")
        patches = [self.patch(row) for row in selected]
        logger.info("Extracted ROI patches", region=region, count=len(patches))
        return patches

