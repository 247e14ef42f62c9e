"""Custom exceptions for pagrad CLI."""

from typing import Optional


class PagradError(Exception):
    """Base exception for pagrad CLI."""

    exit_code = 1

    def __init__(self, message: str, code: Optional[str] = None):
        self.message = message
        self.code = code
        super().__init__(self.message)


class ValidationError(PagradError):
    """Input validation errors."""
    exit_code = 2


class ConfigurationError(PagradError):
    """Configuration errors."""
    exit_code = 2


class VolumeError(PagradError):
    """Volume, manifest and ROI input errors."""
    exit_code = 2


class GraphError(PagradError):
    """Pixel-array graph construction errors."""
    pass


class SpectralError(PagradError):
    """Adjacency and eigendecomposition errors."""
    pass


class FeatureError(PagradError):
    """Radiomics extraction and feature reduction errors."""
    pass


class ModelError(PagradError):
    """Classifier training, prediction and serialization errors."""
    pass


class EvaluationError(PagradError):
    """Cross-validation, metrics and report errors."""
    pass
