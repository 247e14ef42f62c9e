"""Pixel-array graph and spectral models for pagrad CLI."""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..exceptions import GraphError, SpectralError

Edge = Tuple[int, int, float]


@dataclass(frozen=True, eq=False)
class PixelArrayGraph:
    """Weighted undirected graph over the x·y pixel-arrays of a ROI patch."""

    n_total: int
    edges: List[Edge]
    bins: int
    m_min: float
    m_max: float
    threshold: float = 0.5

    def __post_init__(self) -> None:
        seen = set()
        for u, v, w in self.edges:
            if not (0 <= u < v < self.n_total):
                raise GraphError(f"invalid edge endpoints ({u}, {v}) for {self.n_total} nodes", code="BAD_EDGE")
            if not (self.threshold <= w <= 1.0):
                raise GraphError(f"edge weight {w} outside [{self.threshold}, 1]", code="BAD_EDGE")
            if (u, v) in seen:
                raise GraphError(f"duplicate edge ({u}, {v})", code="BAD_EDGE")
            seen.add((u, v))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_total, dtype=np.int64)
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


@dataclass(frozen=True)
class GraphSummary:
    """Per-graph statistics: |E|, active node count and mean edge weight."""

    num_edges: int
    num_active_nodes: int
    avg_edge_weight: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "num_edges": self.num_edges,
            "num_active_nodes": self.num_active_nodes,
            "avg_edge_weight": self.avg_edge_weight,
        }


@dataclass(frozen=True)
class GraphDiagnostics:
    """Connectivity bookkeeping; thresholding does not guarantee a connected graph."""

    n_components: int
    n_active_components: int
    is_connected: bool


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """Dense symmetric adjacency with zero diagonal; isolated nodes stay as zero rows."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise SpectralError("adjacency matrix must be square", code="BAD_SHAPE")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True, eq=False)
class SpectralFeatureVector:
    """Top-k eigenpairs of an adjacency matrix, flattened eigenvector-major."""

    k: int
    n: int
    eigenvalues: np.ndarray
    features: np.ndarray
    subject_id: str = ""
    label: int = 0

    def vectors(self) -> np.ndarray:
        """Eigenvectors as rows (k × n)."""
        return self.features.reshape(self.k, self.n)
