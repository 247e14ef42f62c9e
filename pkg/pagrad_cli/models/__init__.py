"""Domain models for pagrad CLI."""

from .evaluation import FoldMetrics, FoldPlan, Metrics
from .features import DropRecord, FeatureRow, FeatureTable
from .graph import AdjacencyMatrix, GraphDiagnostics, GraphSummary, PixelArrayGraph, SpectralFeatureVector
from .trained_model import MODEL_SCHEMA_VERSION, TrainedModel
from .volume import ManifestRow, PhantomConfig, RoiPatch, RoiSpec, Volume3D

__all__ = [
    "Volume3D",
    "RoiSpec",
    "RoiPatch",
    "PhantomConfig",
    "ManifestRow",
    "PixelArrayGraph",
    "GraphSummary",
    "GraphDiagnostics",
    "AdjacencyMatrix",
    "SpectralFeatureVector",
    "FeatureRow",
    "FeatureTable",
    "DropRecord",
    "TrainedModel",
    "MODEL_SCHEMA_VERSION",
    "FoldPlan",
    "FoldMetrics",
    "Metrics",
]
