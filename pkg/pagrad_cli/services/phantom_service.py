"""Seeded synthetic phantom cohorts standing in for the clinical dataset."""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from ..config import REGIONS
from ..logging_config import StructuredLogger
from ..models.volume import ManifestRow, PhantomConfig, RoiSpec, Volume3D
from .volume_service import save_volume, write_manifest

logger = StructuredLogger("phantom_service")

BASE_INTENSITY = 40.0
INTENSITY_SCALE = 12.0
PATIENT_ACTIVE_FRACTION = 0.25
SIGNAL_REGIONS = ("left_cistern", "right_cistern")


@dataclass
class Phantom:
    """Generated cohort: manifest rows, one volume per subject, and the ROI boxes."""

    manifest: List[ManifestRow]
    volumes: Dict[str, Volume3D]
    roi_specs: Dict[str, RoiSpec]


def signal_weights(snr: float) -> Tuple[float, float]:
    """Latent-signal and noise amplitudes (a, b) for a given SNR."""
    if math.isinf(snr):
        return 1.0, 0.0
    return snr / (1.0 + snr), 1.0 / (1.0 + snr)


def roi_layout(roi_dims: Tuple[int, int, int]) -> Dict[str, RoiSpec]:
    """Four quadrants of a (2·dx, 2·dy, dz) volume, one per region."""
    dx, dy, _ = roi_dims
    origins = {
        "left_cistern": (0, 0, 0),
        "right_cistern": (dx, 0, 0),
        "bone": (0, dy, 0),
        "corpus_callosum": (dx, dy, 0),
    }
    return {region: RoiSpec(region=region, origin=origins[region], size=roi_dims) for region in REGIONS}


def _columns_to_block(columns: np.ndarray, roi_dims: Tuple[int, int, int]) -> np.ndarray:
    dx, dy, dz = roi_dims
    # node j = x + dx*y holds the z-array columns[j]
    return columns.T.reshape(dz, dy, dx)


def patient_active_count(n_nodes: int) -> int:
    """Number of signal-bearing columns in a patient ROI."""
    return min(n_nodes, max(2, int(round(PATIENT_ACTIVE_FRACTION * n_nodes))))


def _region_columns(rng: np.random.Generator, label: int, n_nodes: int, dz: int, snr: float,
                    carries_signal: bool) -> np.ndarray:
    """Per-node z-arrays in latent units, before the intensity transform.

    Controls: every column is ``a·latent + b·noise``. Patients: a random subset of
    columns carries a mix of two latents plus ``b·noise``; the remaining columns hold
    only ``b³·noise``, which at snr > 0 is too faint to leave its intensity bin and so
    shares almost no information with any other column. At snr = 0 both groups reduce
    to independent standard normal columns.
    """
    a, b = signal_weights(snr)
    noise = rng.standard_normal((n_nodes, dz))
    if not carries_signal:
        return noise
    if label == 0:
        latent = rng.standard_normal(dz)
        return a * latent[np.newaxis, :] + b * noise
    latents = rng.standard_normal((2, dz))
    angles = rng.uniform(-0.25 * math.pi, 0.25 * math.pi, size=n_nodes)
    mixed = np.column_stack([np.cos(angles), np.sin(angles)]) @ latents
    active = np.zeros(n_nodes, dtype=bool)
    active[rng.choice(n_nodes, size=patient_active_count(n_nodes), replace=False)] = True
    columns = b ** 3 * noise
    columns[active] = a * mixed[active] + b * noise[active]
    return columns


def generate_phantom(cfg: PhantomConfig) -> Phantom:
    """Pure function of ``cfg``: controls share a latent z-signal across all columns, patients across a quarter."""
    dx, dy, dz = cfg.roi_dims
    specs = roi_layout(cfg.roi_dims)
    manifest: List[ManifestRow] = []
    volumes: Dict[str, Volume3D] = {}

    subjects = [(f"ctrl_{i:03d}", 0) for i in range(cfg.n_per_group)]
    subjects += [(f"pat_{i:03d}", 1) for i in range(cfg.n_per_group)]

    for index, (subject_id, label) in enumerate(subjects):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
        volume = np.zeros((dz, 2 * dy, 2 * dx), dtype=np.float64)
        for region in REGIONS:
            columns = _region_columns(rng, label, dx * dy, dz, cfg.snr, region in SIGNAL_REGIONS)
            block = np.clip(BASE_INTENSITY + INTENSITY_SCALE * _columns_to_block(columns, cfg.roi_dims), 0.0, None)
            x0, y0, _ = specs[region].origin
            volume[:, y0:y0 + dy, x0:x0 + dx] = block
        volumes[subject_id] = Volume3D(volume.astype(np.float32))
        for region in REGIONS:
            spec = specs[region]
            manifest.append(ManifestRow(
                subject_id=subject_id,
                label=label,
                region=region,  # type: ignore[arg-type]
                volume_path=Path("volumes") / f"{subject_id}.hdr",
                roi_origin=spec.origin,
                roi_size=spec.size,
            ))

    logger.info("Generated phantom cohort", subjects=len(subjects), snr=cfg.snr, seed=cfg.seed)
    return Phantom(manifest=manifest, volumes=volumes, roi_specs=specs)


def write_phantom(phantom: Phantom, out_dir: Path) -> Path:
    """Write volumes under ``out_dir/volumes`` and ``out_dir/manifest.csv``; returns the manifest path."""
    out_dir = Path(out_dir)
    for subject_id, volume in phantom.volumes.items():
        save_volume(volume, out_dir / "volumes" / f"{subject_id}.hdr")
    rows = [
        ManifestRow(
            subject_id=row.subject_id,
            label=row.label,
            region=row.region,
            volume_path=out_dir / row.volume_path,
            roi_origin=row.roi_origin,
            roi_size=row.roi_size,
        )
        for row in phantom.manifest
    ]
    manifest_path = out_dir / "manifest.csv"
    write_manifest(rows, manifest_path)
    logger.info("Wrote phantom dataset", out_dir=str(out_dir), volumes=len(phantom.volumes))
    return manifest_path
