"""Pixel-array graphs: histogram mutual information, min-max edge weights, thresholding."""

import math
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..exceptions import GraphError
from ..logging_config import StructuredLogger
from ..models.graph import GraphDiagnostics, GraphSummary, PixelArrayGraph
from ..models.volume import RoiPatch

logger = StructuredLogger("graph_service")

DEFAULT_BINS = 16
DEFAULT_THRESHOLD = 0.5
_PAIR_CHUNK = 4096


def _log_scale(log_base: float) -> float:
    if not log_base > 0 or log_base == 1:
        raise GraphError(f"invalid logarithm base {log_base}", code="BAD_LOG_BASE")
    return 1.0 if log_base == math.e else math.log(log_base)


def _log_function(log_base: float) -> Callable[[np.ndarray], np.ndarray]:
    scale = _log_scale(log_base)
    if log_base == math.e:
        return np.log
    if log_base == 2:
        return np.log2
    return lambda x: np.log(x) / scale


def _bin_codes(values: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width bin index over [0, 1]; exactly 1 falls in the top bin."""
    codes = np.floor(values * bins).astype(np.int64)
    return np.minimum(codes, bins - 1)


def _pairwise_mi(codes: np.ndarray, pairs_u: np.ndarray, pairs_v: np.ndarray, bins: int,
                 log: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Histogram MI for each (u, v) row pair of ``codes``.

    Terms are summed in sorted order, so MI(u, v) and MI(v, u) are bit-identical
    and the result never depends on how pairs are chunked.
    """
    length = codes.shape[1]
    cells = bins * bins
    out = np.empty(pairs_u.shape[0], dtype=np.float64)
    for start in range(0, pairs_u.shape[0], _PAIR_CHUNK):
        pu_idx = pairs_u[start:start + _PAIR_CHUNK]
        pv_idx = pairs_v[start:start + _PAIR_CHUNK]
        n_pairs = pu_idx.shape[0]
        joint = codes[pu_idx] * bins + codes[pv_idx] + (np.arange(n_pairs) * cells)[:, np.newaxis]
        counts = np.bincount(joint.ravel(), minlength=n_pairs * cells).reshape(n_pairs, bins, bins)
        p_joint = counts / length
        p_u = counts.sum(axis=2) / length
        p_v = counts.sum(axis=1) / length
        expected = p_u[:, :, np.newaxis] * p_v[:, np.newaxis, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(counts > 0, p_joint * log(p_joint / expected), 0.0)
        terms = np.sort(terms.reshape(n_pairs, cells), axis=1)
        out[start:start + n_pairs] = np.maximum(terms.sum(axis=1), 0.0)
    return out


def _validate_unit_interval(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
        raise GraphError(f"{what} values must lie in [0, 1]", code="OUT_OF_RANGE")


def mutual_information(u: Sequence[float], v: Sequence[float], bins: int = DEFAULT_BINS,
                       log_base: float = math.e) -> float:
    """Joint-histogram mutual information of two [0, 1] sequences (natural log by default)."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise GraphError(f"length mismatch: {a.shape} vs {b.shape}", code="LENGTH_MISMATCH")
    if a.shape[0] < 2:
        raise GraphError("mutual information needs at least 2 samples", code="TOO_SHORT")
    if bins < 2:
        raise GraphError(f"bins must be >= 2, got {bins}", code="BAD_BINS")
    _validate_unit_interval(a, "u")
    _validate_unit_interval(b, "v")
    codes = np.stack([_bin_codes(a, bins), _bin_codes(b, bins)])
    mi = _pairwise_mi(codes, np.array([0]), np.array([1]), bins, _log_function(log_base))
    return float(mi[0])


def pixel_arrays(patch: RoiPatch) -> np.ndarray:
    """(x·y, z) matrix of z-direction arrays; row j is the node at x = j % dx, y = j // dx."""
    dz = patch.array.shape[0]
    return patch.array.reshape(dz, -1).T


def build_graph(patch: RoiPatch, bins: int = DEFAULT_BINS, threshold: float = DEFAULT_THRESHOLD,
                log_base: float = math.e) -> PixelArrayGraph:
    """All-pairs MI graph with per-graph min-max weights; edges below ``threshold`` are removed."""
    if not (0.0 <= threshold <= 1.0) or math.isnan(threshold):
        raise GraphError(f"degenerate threshold {threshold}: must lie in [0, 1]", code="BAD_THRESHOLD")
    if bins < 2:
        raise GraphError(f"bins must be >= 2, got {bins}", code="BAD_BINS")
    scale = _log_scale(log_base)
    arrays = pixel_arrays(patch)
    if arrays.shape[1] < 2:
        raise GraphError(f"patch {patch.subject_id} needs dz >= 2 for MI", code="TOO_SHORT")
    _validate_unit_interval(arrays, f"patch {patch.subject_id}")

    n_total = arrays.shape[0]
    pairs_u, pairs_v = np.triu_indices(n_total, k=1)
    if pairs_u.size == 0:
        return PixelArrayGraph(n_total=n_total, edges=[], bins=bins, m_min=0.0, m_max=0.0, threshold=threshold)

    # weights come from natural-log MI so the kept edge set cannot depend on log_base
    raw = _pairwise_mi(_bin_codes(arrays, bins), pairs_u, pairs_v, bins, np.log)
    lo, hi = float(raw.min()), float(raw.max())
    m_min, m_max = lo / scale, hi / scale

    if hi == lo:
        # every pair shares one MI value: complete graph of weight 1, or nothing when all are 0
        weights = np.ones_like(raw) if hi > 0 else np.zeros_like(raw)
        keep = weights > 0
    else:
        weights = (raw - lo) / (hi - lo)
        keep = weights >= threshold

    edges = [(int(u), int(v), float(w)) for u, v, w in zip(pairs_u[keep], pairs_v[keep], weights[keep])]
    graph = PixelArrayGraph(n_total=n_total, edges=edges, bins=bins, m_min=m_min, m_max=m_max, threshold=threshold)
    logger.debug("Built pixel-array graph", subject=patch.subject_id, nodes=n_total, edges=len(edges))
    return graph


def graph_summary(graph: PixelArrayGraph) -> GraphSummary:
    """|E|, nodes with degree >= 1, and mean edge weight (0 for an edgeless graph)."""
    if not graph.edges:
        return GraphSummary(num_edges=0, num_active_nodes=0, avg_edge_weight=0.0)
    active = int(np.count_nonzero(graph.degrees()))
    avg = math.fsum(w for _, _, w in graph.edges) / len(graph.edges)
    return GraphSummary(num_edges=len(graph.edges), num_active_nodes=active, avg_edge_weight=avg)


def graph_diagnostics(graph: PixelArrayGraph) -> GraphDiagnostics:
    """Connected components over all nodes and over active nodes only."""
    n = graph.n_total
    if graph.edges:
        rows = [u for u, _, _ in graph.edges]
        cols = [v for _, v, _ in graph.edges]
        matrix = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    else:
        matrix = coo_matrix((n, n))
    n_components, labels = connected_components(matrix, directed=False)
    active = graph.degrees() > 0
    n_active_components = len(np.unique(labels[active])) if active.any() else 0
    return GraphDiagnostics(
        n_components=int(n_components),
        n_active_components=int(n_active_components),
        is_connected=bool(n_components == 1),
    )


def export_graph(graph: PixelArrayGraph, directory: Path, stem: str) -> Tuple[Path, Path]:
    """Write ``<stem>_edges.csv`` (u,v,w) and a one-row ``<stem>_summary.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    edges_path = directory / f"{stem}_edges.csv"
    summary_path = directory / f"{stem}_summary.csv"
    pd.DataFrame(graph.edges, columns=["u", "v", "w"]).to_csv(
        edges_path, index=False, float_format="%.17g", lineterminator="\n"
    )
    summary = graph_summary(graph).as_dict()
    summary.update(n_total=graph.n_total, is_connected=graph_diagnostics(graph).is_connected)
    pd.DataFrame([summary]).to_csv(summary_path, index=False, float_format="%.17g", lineterminator="\n")
    return edges_path, summary_path


class GraphService:
    """Builds graph, summary and diagnostics for max-normalized ROI patches."""

    def __init__(self, bins: int = DEFAULT_BINS, threshold: float = DEFAULT_THRESHOLD,
                 export_dir: Optional[Path] = None):
        self.bins = bins
        self.threshold = threshold
        self.export_dir = export_dir

    def process(self, patch: RoiPatch) -> Tuple[PixelArrayGraph, GraphSummary, GraphDiagnostics]:
        graph = build_graph(patch, bins=self.bins, threshold=self.threshold)
        diagnostics = graph_diagnostics(graph)
        if not diagnostics.is_connected:
            logger.debug("Graph is not connected", subject=patch.subject_id,
                         components=diagnostics.n_components)
        if self.export_dir is not None:
            export_graph(graph, self.export_dir / patch.region, patch.subject_id)
        return graph, graph_summary(graph), diagnostics
