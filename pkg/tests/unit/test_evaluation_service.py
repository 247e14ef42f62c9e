"""Unit tests for evaluation service."""

import numpy as np
import pandas as pd
import pytest

from pagrad_cli.exceptions import EvaluationError, ValidationError
from pagrad_cli.models.evaluation import FoldMetrics, Metrics
from pagrad_cli.models.features import FeatureTable
from pagrad_cli.models.graph import GraphSummary
from pagrad_cli.services.evaluation_service import (
    CVResult,
    FoldSelection,
    and_fuse,
    auroc,
    cohort_graph_report,
    cross_validate,
    derive_seed,
    expand_grid,
    f1_score,
    feature_distributions,
    fuse_scores,
    grid_search,
    holdout_indices,
    holdout_split,
    metrics,
    permutation_importance,
    stratified_kfold,
)
from pagrad_cli.services.learner_service import train_model


@pytest.mark.unit
class TestSplits:
    """Test fold plans and holdout splits."""

    def test_stratified_kfold(self):
        """Test coverage, disjointness and per-fold class balance."""
        labels = [0] * 12 + [1] * 8
        plan = stratified_kfold(labels, k=4, seed=3)

        members = [i for fold in plan.folds for i in fold]
        assert sorted(members) == list(range(20))
        for fold in plan.folds:
            assert sum(labels[i] == 0 for i in fold) == 3
            assert sum(labels[i] == 1 for i in fold) == 2
        assert stratified_kfold(labels, k=4, seed=3).folds == plan.folds

    def test_train_and_test_indices(self):
        """Test that each fold's train set is its complement."""
        plan = stratified_kfold([0] * 6 + [1] * 6, k=3, seed=0)
        for fold in range(plan.k):
            assert sorted(plan.train_indices(fold) + plan.test_indices(fold)) == list(range(12))

    def test_positive_counts_per_fold(self):
        """Test 32 patients and 20 controls over many seeds."""
        labels = [1] * 32 + [0] * 20
        for seed in range(100):
            plan = stratified_kfold(labels, k=5, seed=seed)
            assert all(sum(labels[i] for i in fold) in (6, 7) for fold in plan.folds)

    def test_class_too_small(self):
        """Test a class with fewer rows than folds."""
        with pytest.raises(ValidationError, match="fewer than k=5") as exc:
            stratified_kfold([0] * 10 + [1] * 4, k=5)
        assert exc.value.exit_code == 2

    def test_holdout(self):
        """Test the stratified 80/20 split."""
        labels = [0] * 20 + [1] * 20
        train, test = holdout_indices(labels, 0.2, seed=1)

        assert len(test) == 8
        assert sum(labels[i] for i in test) == 4
        assert sorted(train + test) == list(range(40))
        assert holdout_indices(labels, 0.2, seed=1) == (train, test)

    def test_holdout_split_tables(self, separable_table):
        """Test that the table split keeps rows and columns aligned."""
        train, test = holdout_split(separable_table, 0.2, seed=3)

        assert train.n_rows == 32
        assert test.n_rows == 8
        assert train.feature_names == separable_table.feature_names
        assert not set(train.subject_ids) & set(test.subject_ids)

    def test_holdout_invalid(self):
        """Test fractions outside (0, 1) and tiny classes."""
        with pytest.raises(ValidationError, match="test fraction"):
            holdout_indices([0, 1], 1.0)
        with pytest.raises(ValidationError, match="too few"):
            holdout_indices([0, 0, 1], 0.2)

    def test_derive_seed(self):
        """Test that derived seeds are stable and key dependent."""
        assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
        assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)


@pytest.mark.unit
class TestMetrics:
    """Test accuracy, F1 and AUROC."""

    def test_confusion_counts(self):
        """Test one of each outcome."""
        result = metrics([1, 1, 0, 0], [1, 0, 1, 0], [0.9, 0.4, 0.6, 0.1])

        assert result.accuracy == 0.5
        assert result.f1 == 0.5
        assert result.auroc == 0.75
        assert (result.tp, result.fp, result.tn, result.fn) == (1, 1, 1, 1)

    def test_auroc_ties_and_single_class(self):
        """Test midranks and the undefined case."""
        assert auroc([0, 1], [0.5, 0.5]) == 0.5
        assert auroc([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == 0.75
        assert auroc([1, 1], [0.2, 0.3]) is None

    def test_auroc_matches_pair_counting(self, rng):
        """Test against the pairwise Mann-Whitney count, ties scoring one half."""
        for _ in range(100):
            y = np.array([0, 1] + rng.integers(0, 2, size=18).tolist())
            s = rng.integers(0, 6, size=20).astype(float)
            pos, neg = s[y == 1], s[y == 0]
            pairs = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)

            assert auroc(y, s) == pytest.approx(pairs / (pos.size * neg.size), abs=1e-12)
            assert auroc(y, s) + auroc(y, -s) == pytest.approx(1.0, abs=1e-12)

    def test_f1_empty_denominator(self):
        """Test that no positives anywhere scores zero."""
        assert f1_score(np.zeros(4, dtype=int), np.zeros(4, dtype=int)) == 0.0

    def test_invalid(self):
        """Test mismatched and empty inputs."""
        with pytest.raises(ValidationError, match="equal lengths"):
            metrics([1, 0], [1], [0.5, 0.5])
        with pytest.raises(EvaluationError, match="empty"):
            metrics([], [], [])

    def test_mean_auroc_skips_undefined_folds(self):
        """Test the mean over folds where AUROC exists."""
        folds = Metrics([FoldMetrics(1.0, 1.0, 0.8), FoldMetrics(0.5, 0.0, None), FoldMetrics(1.0, 1.0, 0.6)])
        assert folds.mean_auroc == pytest.approx(0.7)
        assert folds.mean_accuracy == pytest.approx(2.5 / 3.0)


@pytest.mark.unit
class TestCrossValidation:
    """Test k-fold cross-validation and grid search."""

    def test_separable_table(self, separable_table):
        """Test scores and out-of-fold predictions."""
        result = cross_validate(separable_table, "random_forest", {"n_trees": 10}, k=5, seed=0)

        assert len(result.metrics.folds) == 5
        assert result.metrics.mean_f1 >= 0.9
        assert len(result.predictions) == 40
        assert result.predictions["subject_id"].tolist() == sorted(separable_table.subject_ids)
        assert set(result.predictions["fold"]) == set(range(5))

    def test_worker_count_does_not_change_results(self, separable_table):
        """Test that folds run on threads give identical predictions."""
        serial = cross_validate(separable_table, "random_forest", {"n_trees": 5}, k=4, seed=9, workers=1)
        threaded = cross_validate(separable_table, "random_forest", {"n_trees": 5}, k=4, seed=9, workers=3)

        pd.testing.assert_frame_equal(serial.predictions, threaded.predictions)
        assert serial.metrics.as_dict() == threaded.metrics.as_dict()

    def test_selector_runs_per_fold(self, separable_table):
        """Test that the selector sees training folds only."""
        seen = []

        def selector(train: FeatureTable, seed: int) -> FoldSelection:
            seen.append(train.n_rows)
            return FoldSelection(features=["f0"])

        result = cross_validate(separable_table, "random_forest", {"n_trees": 5}, k=4, seed=0, selector=selector)

        assert sorted(seen) == [30, 30, 30, 30]
        assert [s.features for s in result.selections] == [["f0"]] * 4

    def test_single_class_rejected(self, separable_table):
        """Test a table with one label."""
        controls = separable_table.subset_rows(range(20))
        with pytest.raises(ValidationError, match="each label"):
            cross_validate(controls, "random_forest", k=2)

    def test_expand_grid(self):
        """Test lexicographic order with None first."""
        points = expand_grid({"b": [2, 1], "a": [None, 3]})
        assert points == [
            {"a": None, "b": 1},
            {"a": None, "b": 2},
            {"a": 3, "b": 1},
            {"a": 3, "b": 2},
        ]
        with pytest.raises(EvaluationError, match="non-empty grid"):
            expand_grid({"a": []})

    def test_grid_search_first_point_wins_ties(self, separable_table, mocker):
        """Test tie-breaking with equal scores everywhere."""
        def fake_cv(table, kind, params, **kwargs):
            return CVResult(params=params, metrics=Metrics([FoldMetrics(1.0, 0.8, 0.9)]), predictions=pd.DataFrame())

        mock_cv = mocker.patch("pagrad_cli.services.evaluation_service.cross_validate", side_effect=fake_cv)

        result = grid_search(separable_table, "random_forest", {"n_trees": [5, 3]}, k=4)

        assert mock_cv.call_count == 2
        assert result.best_params == {"n_trees": 3}
        assert result.best_f1 == 0.8
        assert [c.kwargs["grid_index"] for c in mock_cv.call_args_list] == [0, 1]

    def test_grid_search_scores_every_point(self, separable_table):
        """Test a real two-point search."""
        result = grid_search(separable_table, "random_forest", {"n_trees": [1, 5]}, k=4, seed=0)

        assert [point for point, _ in result.points] == [{"n_trees": 1}, {"n_trees": 5}]
        assert result.best_f1 == max(score for _, score in result.points)
        assert result.best_params["n_trees"] in (1, 5)


@pytest.mark.unit
class TestFusion:
    """Test AND-fusion."""

    def test_and_fuse(self):
        """Test that only agreeing positives survive."""
        assert and_fuse([1, 1, 0, 0], [1, 0, 1, 0]).tolist() == [1, 0, 0, 0]
        assert fuse_scores([0.2, 0.9], [0.5, 0.4]).tolist() == [0.2, 0.4]

    def test_fused_false_positives_never_increase(self, rng):
        """Test the false-positive bound on random predictions."""
        truth = rng.integers(0, 2, size=50)
        left = rng.integers(0, 2, size=50)
        right = rng.integers(0, 2, size=50)
        fused = and_fuse(left, right)

        def false_positives(pred):
            return int(np.sum((truth == 0) & (pred == 1)))

        assert false_positives(fused) <= min(false_positives(left), false_positives(right))

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="length mismatch"):
            and_fuse([1, 0], [1])


@pytest.mark.unit
class TestPermutationImportance:
    """Test permutation importance."""

    def _table(self, separable_table):
        values = np.column_stack([separable_table.column("f0"), separable_table.column("f1"),
                                  np.full(separable_table.n_rows, 2.0)])
        return FeatureTable(["f0", "f1", "flat"], values, separable_table.subject_ids, separable_table.labels)

    def test_ranking(self, separable_table):
        """Test that the separating feature ranks first and a constant drops nothing."""
        table = self._table(separable_table)
        model = train_model(table, "random_forest", {"n_trees": 10}, seed=0)

        frame = permutation_importance(model, table, n_repeats=5, seed=0)

        assert list(frame.columns) == ["feature", "mean_drop", "std_drop", "rank"]
        assert frame.loc[0, "feature"] == "f0"
        assert frame["rank"].tolist() == [1, 2, 3]
        flat = frame[frame["feature"] == "flat"].iloc[0]
        assert flat["mean_drop"] == 0.0
        assert flat["std_drop"] == 0.0

    def test_deterministic_across_workers(self, separable_table):
        """Test that threads do not change the result."""
        table = self._table(separable_table)
        model = train_model(table, "random_forest", {"n_trees": 5}, seed=0)

        serial = permutation_importance(model, table, n_repeats=3, seed=4, workers=1)
        threaded = permutation_importance(model, table, n_repeats=3, seed=4, workers=3)

        pd.testing.assert_frame_equal(serial, threaded)

    def test_invalid_repeats(self, separable_table):
        model = train_model(separable_table, "random_forest", {"n_trees": 2}, seed=0)
        with pytest.raises(ValidationError, match="n_repeats"):
            permutation_importance(model, separable_table, n_repeats=0)


@pytest.mark.unit
class TestCohortReports:
    """Test group distribution reports."""

    def test_cohort_graph_report(self):
        """Test five-number summaries per group and statistic."""
        summaries = [GraphSummary(2, 3, 0.5), GraphSummary(4, 5, 0.7), GraphSummary(10, 8, 0.9),
                     GraphSummary(12, 8, 1.0)]
        frame = cohort_graph_report(summaries, [0, 0, 1, 1])

        assert len(frame) == 6
        edges = frame[(frame["group"] == "control") & (frame["statistic"] == "num_edges")].iloc[0]
        assert edges["min"] == 2.0
        assert edges["median"] == 3.0
        assert edges["max"] == 4.0

        with pytest.raises(EvaluationError, match="patient group"):
            cohort_graph_report(summaries[:2], [0, 0])

    def test_feature_distributions(self, separable_table):
        """Test that the separating feature has disjoint group ranges."""
        frame = feature_distributions(separable_table, ["f0"])

        assert frame["group"].tolist() == ["control", "patient"]
        assert frame.loc[0, "max"] < frame.loc[1, "min"]
