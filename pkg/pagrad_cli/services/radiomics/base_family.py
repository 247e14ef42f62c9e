"""Base class for radiomics feature families."""

from abc import ABC, abstractmethod
from typing import Dict, Tuple

import numpy as np

from ...models.volume import RoiPatch


class FeatureFamily(ABC):
    """Abstract base class for a named group of radiomics features."""

    name: str = ""
    FEATURES: Tuple[str, ...] = ()

    def applies_to(self, image_name: str) -> bool:
        """Check if this family is computed on the given filtered image."""
        return True

    @abstractmethod
    def extract(self, image: RoiPatch, levels: np.ndarray, n_levels: int) -> Dict[str, float]:
        """Compute the family's features for one filtered image and its discretized grid."""
        pass

    def feature_count(self) -> int:
        return len(self.FEATURES)

    def qualified(self, image_name: str, values: Dict[str, float]) -> Dict[str, float]:
        """Prefix raw feature names as ``<image>-<family>-<Feature>``."""
        return {f"{image_name}-{self.name}-{key}": values[key] for key in self.FEATURES}
