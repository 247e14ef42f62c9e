"""Service layer for pagrad CLI."""

from .graph_service import GraphService
from .phantom_service import generate_phantom, write_phantom
from .pipeline_service import PipelineService
from .radiomics_service import RadiomicsService
from .volume_service import VolumeService

__all__ = [
    "VolumeService",
    "GraphService",
    "RadiomicsService",
    "PipelineService",
    "generate_phantom",
    "write_phantom",
]
