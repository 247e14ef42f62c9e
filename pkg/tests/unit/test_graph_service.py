"""Unit tests for graph service."""

import math

import numpy as np
import pandas as pd
import pytest

from pagrad_cli.exceptions import GraphError
from pagrad_cli.models.graph import PixelArrayGraph
from pagrad_cli.models.volume import RoiPatch
from pagrad_cli.services.graph_service import (
    GraphService,
    build_graph,
    export_graph,
    graph_diagnostics,
    graph_summary,
    mutual_information,
    pixel_arrays,
)
from pagrad_cli.services.volume_service import normalize_max


def _random_patch(rng, dims=(3, 3, 12)):
    dx, dy, dz = dims
    return normalize_max(RoiPatch(array=rng.uniform(0.01, 1.0, size=(dz, dy, dx)), subject_id="r"))


def _oracle_mi(u, v, bins):
    joint = {}
    for a, b in zip(u, v):
        key = (min(int(a * bins), bins - 1), min(int(b * bins), bins - 1))
        joint[key] = joint.get(key, 0) + 1
    n = len(u)
    pu, pv = {}, {}
    for (i, j), count in joint.items():
        pu[i] = pu.get(i, 0) + count / n
        pv[j] = pv.get(j, 0) + count / n
    return sum(c / n * math.log((c / n) / (pu[i] * pv[j])) for (i, j), c in joint.items())


@pytest.mark.unit
class TestMutualInformation:
    """Test histogram mutual information."""

    def test_self_information_is_entropy(self):
        """Test MI(u, u) against the binned entropy."""
        u = [0.0, 0.5, 1.0, 0.25]
        assert mutual_information(u, u, bins=2) == pytest.approx(math.log(2))
        assert mutual_information(u, u, bins=2, log_base=2) == pytest.approx(1.0)

    def test_symmetric_and_non_negative(self, rng):
        """Test MI(u, v) == MI(v, u) exactly."""
        u = rng.uniform(0, 1, 50)
        v = rng.uniform(0, 1, 50)
        assert mutual_information(u, v) == mutual_information(v, u)
        assert mutual_information(u, v) >= 0.0

    def test_constant_sequence(self, rng):
        """Test that a constant sequence shares no information."""
        assert mutual_information(np.full(20, 0.3), rng.uniform(0, 1, 20)) == 0.0

    def test_matches_brute_force_oracle(self, rng):
        """Test seeded random pairs against a loop-based joint histogram."""
        for _ in range(200):
            u = rng.uniform(0, 1, 16)
            v = rng.uniform(0, 1, 16)
            assert mutual_information(u, v, bins=16) == pytest.approx(_oracle_mi(u, v, 16), abs=1e-12)

    def test_invalid_inputs(self):
        """Test rejected inputs."""
        with pytest.raises(GraphError, match="length mismatch"):
            mutual_information([0.1, 0.2], [0.1, 0.2, 0.3])
        with pytest.raises(GraphError, match=r"\[0, 1\]"):
            mutual_information([0.1, 1.2], [0.1, 0.2])
        with pytest.raises(GraphError, match="bins"):
            mutual_information([0.1, 0.2], [0.1, 0.2], bins=1)
        with pytest.raises(GraphError, match="logarithm base"):
            mutual_information([0.1, 0.2], [0.1, 0.2], log_base=1)


@pytest.mark.unit
class TestBuildGraph:
    """Test pixel-array graph construction."""

    def test_pixel_array_order(self, rng):
        """Test that node j is the z-array at x = j % dx, y = j // dx."""
        patch = RoiPatch(array=rng.uniform(0, 1, size=(3, 2, 2)))
        arrays = pixel_arrays(patch)
        assert arrays.shape == (4, 3)
        assert np.array_equal(arrays[3], patch.array[:, 1, 1])
        assert np.array_equal(arrays[1], patch.array[:, 0, 1])

    def test_edge_invariants(self, rng):
        """Test endpoints, weight range and the top edge."""
        graph = build_graph(_random_patch(rng))

        assert graph.n_total == 9
        assert graph.num_edges >= 1
        weights = [w for _, _, w in graph.edges]
        assert all(0.5 <= w <= 1.0 for w in weights)
        assert max(weights) == 1.0
        assert all(u < v for u, v, _ in graph.edges)

    def test_threshold_extremes(self, rng):
        """Test that threshold 0 keeps every pair and 1 keeps only the maxima."""
        patch = _random_patch(rng)
        full = build_graph(patch, threshold=0.0)
        top = build_graph(patch, threshold=1.0)

        assert full.num_edges == 9 * 8 // 2
        assert all(w == 1.0 for _, _, w in top.edges)
        assert top.num_edges <= full.num_edges

    def test_identical_columns_give_complete_graph(self, rng):
        """Test the equal-MI case with non-zero information."""
        column = rng.uniform(0, 1, size=10)
        array = np.repeat(column[:, np.newaxis, np.newaxis], 4, axis=1).repeat(2, axis=2)
        graph = build_graph(normalize_max(RoiPatch(array=array)))

        assert graph.num_edges == 8 * 7 // 2
        assert all(w == 1.0 for _, _, w in graph.edges)

    def test_constant_patch_has_no_edges(self):
        """Test the equal-MI case with zero information."""
        graph = build_graph(RoiPatch(array=np.ones((6, 2, 2))))
        assert graph.num_edges == 0
        assert graph_summary(graph).as_dict() == {"num_edges": 0, "num_active_nodes": 0, "avg_edge_weight": 0.0}

    def test_invalid_inputs(self, rng):
        """Test rejected thresholds, short arrays and unnormalized values."""
        with pytest.raises(GraphError, match="degenerate threshold"):
            build_graph(_random_patch(rng), threshold=1.5)
        with pytest.raises(GraphError, match="dz >= 2"):
            build_graph(RoiPatch(array=np.full((1, 2, 2), 0.5)))
        with pytest.raises(GraphError, match=r"\[0, 1\]"):
            build_graph(RoiPatch(array=np.full((4, 2, 2), 2.0)))

    def test_log_base_invariance(self, rng):
        """Test that log2 MI gives the same edges and weights."""
        for _ in range(20):
            patch = _random_patch(rng, dims=(4, 4, 16))
            natural = build_graph(patch)
            binary = build_graph(patch, log_base=2)

            assert [(u, v) for u, v, _ in natural.edges] == [(u, v) for u, v, _ in binary.edges]
            for (_, _, w1), (_, _, w2) in zip(natural.edges, binary.edges):
                assert w1 == pytest.approx(w2, abs=1e-12)

    def test_log_base_does_not_move_threshold_edges(self, rng):
        """Test that edges and weights are bit-identical across log bases and only M scales."""
        for _ in range(50):
            patch = _random_patch(rng, dims=(4, 4, 16))
            natural = build_graph(patch)
            for base in (2, 10):
                other = build_graph(patch, log_base=base)

                assert other.edges == natural.edges
                assert other.m_max == pytest.approx(natural.m_max / math.log(base), rel=1e-12)

    def test_two_by_two_patch_matches_exhaustive_pairs(self, rng):
        """Test a 2×2×8 patch against all 6 pairs scored, min-max normalized and thresholded by hand."""
        for _ in range(25):
            patch = _random_patch(rng, dims=(2, 2, 8))
            arrays = pixel_arrays(patch)
            pairs = [(u, v) for u in range(4) for v in range(u + 1, 4)]
            raw = {pair: _oracle_mi(arrays[pair[0]], arrays[pair[1]], 16) for pair in pairs}
            lo, hi = min(raw.values()), max(raw.values())
            if hi - lo < 1e-12:
                expected = {pair: 1.0 for pair in pairs} if hi > 0 else {}
            else:
                scaled = {pair: (m - lo) / (hi - lo) for pair, m in raw.items()}
                if any(abs(w - 0.5) < 1e-9 for w in scaled.values()):
                    continue
                expected = {pair: w for pair, w in scaled.items() if w >= 0.5}

            graph = build_graph(patch)

            assert {(u, v) for u, v, _ in graph.edges} == set(expected)
            for u, v, w in graph.edges:
                assert w == pytest.approx(expected[(u, v)], abs=1e-9)
            summary = graph_summary(graph)
            assert summary.num_edges == len(expected)
            assert summary.num_active_nodes == len({node for pair in expected for node in pair})
            if expected:
                assert summary.avg_edge_weight == pytest.approx(sum(expected.values()) / len(expected), abs=1e-9)

    def test_two_node_patch_has_single_unit_edge(self, rng):
        """Test that a 1×2×z patch gives one edge of weight 1."""
        array = rng.uniform(0.05, 1.0, size=(12, 2, 1))
        graph = build_graph(normalize_max(RoiPatch(array=array)))

        assert graph.n_total == 2
        assert graph.edges == [(0, 1, 1.0)]
        assert graph.m_min == graph.m_max > 0.0

    def test_deterministic(self, rng):
        """Test that rebuilding gives identical edges."""
        patch = _random_patch(rng, dims=(5, 5, 16))
        assert build_graph(patch).edges == build_graph(patch).edges


@pytest.mark.unit
class TestGraphSummary:
    """Test summaries and diagnostics."""

    def test_summary_and_components(self):
        """Test a small hand-built graph."""
        graph = PixelArrayGraph(n_total=4, edges=[(0, 1, 1.0), (1, 2, 0.5)], bins=16, m_min=0.0, m_max=1.0)

        summary = graph_summary(graph)
        assert summary.num_edges == 2
        assert summary.num_active_nodes == 3
        assert summary.avg_edge_weight == 0.75

        diagnostics = graph_diagnostics(graph)
        assert diagnostics.n_components == 2
        assert diagnostics.n_active_components == 1
        assert diagnostics.is_connected is False

    def test_graph_model_rejects_bad_edges(self):
        """Test edge validation."""
        with pytest.raises(GraphError, match="invalid edge"):
            PixelArrayGraph(n_total=3, edges=[(1, 0, 1.0)], bins=16, m_min=0.0, m_max=1.0)
        with pytest.raises(GraphError, match="outside"):
            PixelArrayGraph(n_total=3, edges=[(0, 1, 0.2)], bins=16, m_min=0.0, m_max=1.0)
        with pytest.raises(GraphError, match="duplicate"):
            PixelArrayGraph(n_total=3, edges=[(0, 1, 1.0), (0, 1, 0.9)], bins=16, m_min=0.0, m_max=1.0)

    def test_export_graph(self, tmp_path):
        """Test the edge list and summary CSVs."""
        graph = PixelArrayGraph(n_total=3, edges=[(0, 2, 0.75)], bins=16, m_min=0.0, m_max=1.0)
        edges_path, summary_path = export_graph(graph, tmp_path, "s1")

        edges = pd.read_csv(edges_path)
        assert list(edges.columns) == ["u", "v", "w"]
        assert edges.iloc[0].tolist() == [0, 2, 0.75]
        summary = pd.read_csv(summary_path)
        assert summary.loc[0, "num_edges"] == 1
        assert summary.loc[0, "n_total"] == 3

    def test_graph_service_export(self, rng, tmp_path):
        """Test that the service writes graphs per region."""
        service = GraphService(export_dir=tmp_path)
        graph, summary, diagnostics = service.process(_random_patch(rng))

        assert summary.num_edges == graph.num_edges
        assert diagnostics.n_components >= 1
        assert (tmp_path / "left_cistern" / "r_edges.csv").exists()
