"""Radiomics extraction service that coordinates filters and feature families."""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Sequence

from ..config import FEATURE_FAMILIES, FILTER_KINDS, RunConfig
from ..logging_config import StructuredLogger
from ..models.features import FeatureRow, FeatureTable
from ..models.volume import RoiPatch
from .radiomics import (
    FeatureFamily,
    FirstOrderFamily,
    GLCMFamily,
    GLRLMFamily,
    ShapeFamily,
    apply_filter,
    discretize,
    enabled_filters,
)
from .volume_service import zscore_normalize

logger = StructuredLogger("radiomics_service")

_FAMILY_TYPES = {
    "firstorder": FirstOrderFamily,
    "glcm": GLCMFamily,
    "glrlm": GLRLMFamily,
    "shape": ShapeFamily,
}


class RadiomicsService:
    """Filtered images × feature families → one named FeatureRow per patch."""

    def __init__(self, filters: Sequence[str] = FILTER_KINDS, log_sigmas: Sequence[float] = (1.0, 2.0),
                 families: Sequence[str] = FEATURE_FAMILIES, bin_count: int = 32, zscore: bool = True):
        self.filter_kinds = enabled_filters(filters, log_sigmas)
        self.family_names = [name for name in FEATURE_FAMILIES if name in families]
        self.families: List[FeatureFamily] = [_FAMILY_TYPES[name]() for name in self.family_names]
        self.bin_count = bin_count
        self.zscore = zscore

    @classmethod
    def from_config(cls, config: RunConfig) -> "RadiomicsService":
        return cls(
            filters=config.filters,
            log_sigmas=config.log_sigmas,
            families=config.families,
            bin_count=config.bin_count,
            zscore=config.zscore,
        )

    def image_names(self) -> List[str]:
        return [name for kind in self.filter_kinds for name in kind.image_names()]

    def feature_width(self) -> int:
        """n_images · (per-image family sizes) + shape size."""
        per_image = sum(f.feature_count() for f in self.families if not isinstance(f, ShapeFamily))
        shape = sum(f.feature_count() for f in self.families if isinstance(f, ShapeFamily))
        return len(self.image_names()) * per_image + shape

    def features_manifest(self) -> Dict[str, Any]:
        """Provenance of the enabled extraction setup."""
        return {
            "images": self.image_names(),
            "families": {f.name: list(f.FEATURES) for f in self.families},
            "bin_count": self.bin_count,
            "zscore": self.zscore,
            "feature_width": self.feature_width(),
        }

    def extract_all(self, patch: RoiPatch) -> FeatureRow:
        """Deterministic, uniquely named feature row for one ROI patch."""
        source = zscore_normalize(patch) if self.zscore else patch
        row = FeatureRow(subject_id=patch.subject_id, label=patch.label)
        shape_done = False

        for kind in self.filter_kinds:
            for image_name, image in apply_filter(source, kind).items():
                levels = discretize(image.array, self.bin_count)
                for family in self.families:
                    if not family.applies_to(image_name):
                        continue
                    values = family.extract(image, levels, self.bin_count)
                    for name, value in family.qualified(image_name, values).items():
                        row.add(name, value)
                    shape_done = shape_done or isinstance(family, ShapeFamily)

        # shape describes the ROI block, so it is emitted even when the original image is not enabled
        for family in self.families:
            if isinstance(family, ShapeFamily) and not shape_done:
                values = family.extract(source, discretize(source.array, self.bin_count), self.bin_count)
                for name, value in family.qualified("original", values).items():
                    row.add(name, value)

        logger.debug("Extracted radiomics features", subject=patch.subject_id, width=len(row.features))
        return row

    def extract_table(self, patches: Sequence[RoiPatch], workers: int = 1) -> FeatureTable:
        """Rows in input order; extraction runs on ``workers`` threads."""
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            rows = list(pool.map(self.extract_all, patches))
        table = FeatureTable.from_rows(rows)
        logger.info("Built radiomics feature table", rows=table.n_rows, features=table.n_features)
        return table
