"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from pagrad_cli.config import RunConfig, Settings
from pagrad_cli.models.features import FeatureTable
from pagrad_cli.models.volume import PhantomConfig, RoiPatch
from pagrad_cli.services.phantom_service import generate_phantom, write_phantom


@pytest.fixture
def rng():
    """Seeded generator so test data is reproducible."""
    return np.random.default_rng(1234)


@pytest.fixture
def mock_settings():
    """Settings for testing."""
    return Settings(debug=True, workers=2, default_seed=0)


@pytest.fixture
def small_phantom_config():
    """Small cohort: 6 subjects per class, 4×4 nodes, 8-voxel z-arrays."""
    return PhantomConfig(n_per_group=6, roi_dims=(4, 4, 8), snr=4.0, seed=7)


@pytest.fixture
def small_phantom(small_phantom_config):
    return generate_phantom(small_phantom_config)


@pytest.fixture
def phantom_manifest(small_phantom, tmp_path):
    """On-disk phantom dataset; returns the manifest path."""
    return write_phantom(small_phantom, tmp_path / "phantom")


@pytest.fixture
def small_pag_config(tmp_path):
    """Fast pag run on the small phantom."""
    return RunConfig(
        pipeline="pag",
        k_eigen=4,
        cv_k=3,
        model_params={"n_trees": 10},
        out_dir=tmp_path / "pag_out",
        timestamp=False,
    )


@pytest.fixture
def small_radiomics_config(tmp_path):
    """Fast radiomics run on the two cistern regions."""
    return RunConfig(
        pipeline="radiomics",
        regions=["left_cistern", "right_cistern"],
        filters=["original", "square"],
        families=["firstorder", "glcm", "shape"],
        cv_k=3,
        model_params={"n_trees": 20},
        selector_params={"n_trees": 20},
        out_dir=tmp_path / "radiomics_out",
        timestamp=False,
    )


@pytest.fixture
def separable_table(rng):
    """20 controls and 20 patients; feature f0 separates them, f1..f3 are noise."""
    labels = np.repeat([0, 1], 20)
    values = rng.normal(0.0, 1.0, size=(40, 4))
    values[:, 0] = labels * 4.0 + rng.normal(0.0, 0.3, size=40)
    return FeatureTable(
        feature_names=["f0", "f1", "f2", "f3"],
        values=values,
        subject_ids=[f"s{i:02d}" for i in range(40)],
        labels=labels,
    )


@pytest.fixture
def ramp_patch():
    """Patch whose values rise along x: array[z, y, x] = x / 3."""
    array = np.broadcast_to(np.arange(4, dtype=np.float64) / 3.0, (4, 4, 4)).copy()
    return RoiPatch(array=array, subject_id="ramp", region="left_cistern", label=0)
