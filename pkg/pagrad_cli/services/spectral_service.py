"""Adjacency spectra: dense adjacency, sorted eigenpairs and flattened top-k features."""

from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from ..exceptions import SpectralError
from ..logging_config import StructuredLogger
from ..models.features import FeatureTable
from ..models.graph import AdjacencyMatrix, PixelArrayGraph, SpectralFeatureVector

logger = StructuredLogger("spectral_service")

SYMMETRY_TOLERANCE = 1e-12
# entries this close to the largest magnitude count as tied for sign fixing
_SIGN_TIE_TOLERANCE = 1e-12


def adjacency(graph: PixelArrayGraph) -> AdjacencyMatrix:
    """Dense n_total × n_total matrix; isolated nodes stay as zero rows and columns."""
    values = np.zeros((graph.n_total, graph.n_total), dtype=np.float64)
    for u, v, w in graph.edges:
        values[u, v] = w
        values[v, u] = w
    return AdjacencyMatrix(values)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive (lowest index on ties)."""
    fixed = vectors.copy()
    for i in range(fixed.shape[1]):
        column = fixed[:, i]
        magnitude = np.abs(column)
        pivot = int(np.flatnonzero(magnitude >= magnitude.max() - _SIGN_TIE_TOLERANCE)[0])
        if column[pivot] < 0:
            fixed[:, i] = -column
    return fixed


def eigendecompose(matrix: AdjacencyMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending algebraic order and matching unit eigenvectors as columns."""
    values = matrix.values
    if not np.all(np.isfinite(values)):
        raise SpectralError("adjacency matrix contains non-finite values", code="NON_FINITE")
    if values.size and np.max(np.abs(values - values.T)) > SYMMETRY_TOLERANCE:
        raise SpectralError("adjacency matrix is not symmetric", code="NOT_SYMMETRIC")
    if matrix.n == 0:
        return np.zeros(0), np.zeros((0, 0))

    eigenvalues, eigenvectors = linalg.eigh(values)
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], _fix_signs(eigenvectors[:, order])


def spectral_features(matrix: AdjacencyMatrix, k: int = 8, subject_id: str = "",
                      label: int = 0) -> SpectralFeatureVector:
    """Top-k eigenvectors by descending eigenvalue, flattened eigenvector-major."""
    if k < 1:
        raise SpectralError(f"k must be >= 1, got {k}", code="BAD_K")
    if k > matrix.n:
        raise SpectralError(f"insufficient nodes: k={k} exceeds n={matrix.n}", code="INSUFFICIENT_NODES")
    eigenvalues, eigenvectors = eigendecompose(matrix)
    top = eigenvectors[:, :k]
    return SpectralFeatureVector(
        k=k,
        n=matrix.n,
        eigenvalues=eigenvalues[:k].copy(),
        features=top.T.reshape(-1).copy(),
        subject_id=subject_id,
        label=label,
    )


def feature_names(k: int, n: int) -> List[str]:
    return [f"eig{i + 1}_node{j}" for i in range(k) for j in range(n)]


def stack_features(vectors: Sequence[SpectralFeatureVector]) -> FeatureTable:
    """One row per subject; every vector must share the same (k, n)."""
    if not vectors:
        raise SpectralError("no spectral feature vectors to stack", code="EMPTY")
    shapes = {(v.k, v.n) for v in vectors}
    if len(shapes) > 1:
        raise SpectralError(
            f"inconsistent ROI dims across subjects: (k, n) in {sorted(shapes)}", code="INCONSISTENT_DIMS"
        )
    k, n = shapes.pop()
    return FeatureTable(
        feature_names=feature_names(k, n),
        values=np.stack([v.features for v in vectors]),
        subject_ids=[v.subject_id for v in vectors],
        labels=np.array([v.label for v in vectors], dtype=np.int64),
    )


def eigenvalue_frame(vectors: Sequence[SpectralFeatureVector]) -> pd.DataFrame:
    """Retained eigenvalues per subject as columns lambda1..lambdak."""
    rows = []
    for vector in vectors:
        row = {"subject_id": vector.subject_id, "label": vector.label}
        row.update({f"lambda{i + 1}": float(value) for i, value in enumerate(vector.eigenvalues)})
        rows.append(row)
    return pd.DataFrame(rows)


def graph_features(graph: PixelArrayGraph, k: int, subject_id: str, label: int) -> SpectralFeatureVector:
    """adjacency → eigendecompose → top-k flattening for one subject graph."""
    vector = spectral_features(adjacency(graph), k=k, subject_id=subject_id, label=label)
    logger.debug("Spectral features computed", subject=subject_id, k=k, n=vector.n,
                 lambda1=float(vector.eigenvalues[0]))
    return vector
