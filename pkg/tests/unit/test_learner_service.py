"""Unit tests for learner service."""

import json

import numpy as np
import pytest

from pagrad_cli.exceptions import ConfigurationError, FeatureError, ModelError, ValidationError
from pagrad_cli.models.features import FeatureTable
from pagrad_cli.services.learner_service import (
    load_model,
    pearson,
    predict,
    reduce_features,
    resolve_params,
    save_model,
    select_by_importance,
    split_importance,
    train_gbdt,
    train_model,
    train_random_forest,
    train_svm_rbf,
)

PLANTED = (10, 30, 50)


def _planted_table(rng):
    """100 controls and three patient subgroups, each flagged by its own column among 50 noise columns."""
    groups = np.repeat([0, 1, 2, 3], [100, 34, 33, 33])
    values = rng.normal(0.0, 1.0, size=(groups.size, 53))
    for k, column in enumerate(PLANTED):
        values[:, column] = 5.0 * (groups == k + 1) + rng.normal(0.0, 0.1, size=groups.size)
    return FeatureTable(
        feature_names=[f"x{i:02d}" for i in range(53)],
        values=values,
        subject_ids=[f"s{i:03d}" for i in range(groups.size)],
        labels=(groups > 0).astype(np.int64),
    )


@pytest.mark.unit
class TestPearson:
    """Test correlation."""

    def test_values(self):
        """Test perfect, inverse and constant inputs."""
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
        assert pearson([1, 1, 1], [1, 2, 3]) == 0.0

    def test_invalid(self):
        """Test mismatched and short inputs."""
        with pytest.raises(ValidationError, match="length mismatch"):
            pearson([1, 2], [1, 2, 3])
        with pytest.raises(ValidationError, match="at least 2"):
            pearson([1], [1])


@pytest.mark.unit
class TestReduceFeatures:
    """Test correlation-based feature reduction."""

    def test_target_and_pairwise_rules(self, separable_table):
        """Test a constant column and a duplicate column."""
        values = np.column_stack([
            separable_table.column("f0"),
            separable_table.column("f0"),
            np.ones(separable_table.n_rows),
            separable_table.column("f1"),
        ])
        table = FeatureTable(["b", "a", "const", "noise"], values, separable_table.subject_ids,
                             separable_table.labels)

        reduced, drops = reduce_features(table, target_min=0.0001)

        assert reduced.feature_names == ["a", "noise"]
        by_name = {d.feature: d for d in drops}
        assert by_name["const"].rule == "target"
        assert by_name["b"].rule == "pairwise"
        assert by_name["b"].partner == "a"
        assert by_name["b"].statistic == pytest.approx(1.0)

    def test_survivors_keep_input_order(self, separable_table):
        """Test that reduction does not reorder columns."""
        reduced, drops = reduce_features(separable_table, target_min=0.0, pair_max=1.0)
        assert reduced.feature_names == separable_table.feature_names
        assert drops == []

    def test_column_order_does_not_change_survivors(self, rng):
        """Test that shuffling columns keeps the same surviving set."""
        labels = np.repeat([0, 1], 15)
        base = rng.normal(size=(30, 6))
        values = np.column_stack([base, base[:, :4] + rng.normal(0, 0.05, size=(30, 4)), labels + rng.normal(size=30),
                                  np.zeros(30)])
        names = [f"c{i:02d}" for i in range(12)]
        table = FeatureTable(names, values, [f"s{i}" for i in range(30)], labels)
        order = rng.permutation(12)
        shuffled = table.select_columns([names[i] for i in order])

        kept, _ = reduce_features(table)
        kept_shuffled, _ = reduce_features(shuffled)

        assert set(kept.feature_names) == set(kept_shuffled.feature_names)
        assert "c11" not in kept.feature_names

    def test_nothing_survives(self, separable_table):
        """Test an impossible target threshold."""
        with pytest.raises(FeatureError, match="no features survive") as exc:
            reduce_features(separable_table, target_min=1.1)
        assert exc.value.exit_code == 1


@pytest.mark.unit
class TestTraining:
    """Test parameter resolution, training and prediction."""

    def test_resolve_params(self):
        """Test defaults, overrides and unknown names."""
        params = resolve_params("gbdt", {"n_trees": 10})
        assert params["n_trees"] == 10
        assert params["learning_rate"] == 0.01
        assert params["max_leaves"] == 31

        with pytest.raises(ConfigurationError, match="unknown model kind"):
            resolve_params("knn")
        with pytest.raises(ConfigurationError, match="depth"):
            resolve_params("svm_rbf", {"depth": 3})

    def test_train_and_predict(self, separable_table):
        """Test bound feature names and predictions."""
        model = train_model(separable_table, "random_forest", {"n_trees": 10}, seed=0)
        labels, scores = predict(model, separable_table)

        assert model.feature_names == ["f0", "f1", "f2", "f3"]
        assert model.training_rows == 40
        assert labels.shape == (40,)
        assert scores.shape == (40,)

    def test_kind_specific_entry_points(self, separable_table):
        """Test that each trainer fits its own learner kind on the separable column."""
        forest = train_random_forest(separable_table, {"n_trees": 5}, seed=1)
        svm = train_svm_rbf(separable_table, seed=1)
        boosted = train_gbdt(separable_table, {"learning_rate": 0.1, "n_trees": 5}, seed=1)

        assert [m.kind for m in (forest, svm, boosted)] == ["random_forest", "svm_rbf", "gbdt"]
        for model in (forest, svm, boosted):
            labels, _ = predict(model, separable_table)
            assert np.mean(labels == separable_table.labels) >= 0.9
        assert boosted.diagnostics["trees_built"] == 5

    def test_schema_mismatch(self, separable_table):
        """Test predicting with reordered columns."""
        model = train_model(separable_table, "random_forest", {"n_trees": 3}, seed=0)
        reordered = separable_table.select_columns(["f1", "f0", "f2", "f3"])

        with pytest.raises(ModelError, match="schema mismatch") as exc:
            predict(model, reordered)
        assert exc.value.code == "SCHEMA_MISMATCH"

    def test_svm_diagnostics(self, separable_table):
        """Test the convergence record of an SVM model."""
        model = train_model(separable_table, "svm_rbf", seed=0)
        assert model.diagnostics["converged"] is True
        assert model.diagnostics["support_vectors"] >= 1


@pytest.mark.unit
class TestSplitImportance:
    """Test boosted split importance and selection."""

    def test_separable_feature(self, separable_table):
        """Test that only the separating feature is selected."""
        model = train_gbdt(separable_table, {"learning_rate": 0.1, "n_trees": 10}, seed=0)
        importance = split_importance(model)

        assert importance == {"f0": 10, "f1": 0, "f2": 0, "f3": 0}
        assert select_by_importance(importance) == ["f0"]
        assert select_by_importance(importance, threshold=11) == []

    def test_not_gbdt(self, separable_table):
        """Test importance on a forest."""
        model = train_model(separable_table, "random_forest", {"n_trees": 3}, seed=0)
        with pytest.raises(ModelError, match="gbdt") as exc:
            split_importance(model)
        assert exc.value.code == "NOT_GBDT"

    @pytest.mark.slow
    def test_planted_features_recovered(self, rng):
        """Test selection at the default boosting configuration."""
        table = _planted_table(rng)
        model = train_gbdt(table, seed=0)
        selected = set(select_by_importance(split_importance(model)))

        planted = {f"x{i:02d}" for i in PLANTED}
        assert planted <= selected
        assert len(selected - planted) <= 5

    @pytest.mark.slow
    def test_planted_features_recovered_on_small_table(self, rng):
        """Test selection on 40 rows × 60 columns with three planted patient subgroups."""
        groups = np.repeat([0, 1, 2, 3], [20, 12, 6, 2])
        values = rng.normal(0.0, 1.0, size=(40, 60))
        for k in range(3):
            values[:, k] = 5.0 * (groups == k + 1) + rng.normal(0.0, 0.1, size=40)
        table = FeatureTable(
            feature_names=[f"x{i:02d}" for i in range(60)],
            values=values,
            subject_ids=[f"s{i:02d}" for i in range(40)],
            labels=(groups > 0).astype(np.int64),
        )

        # leaves of two patients must stay splittable late in boosting
        model = train_gbdt(table, {"min_sum_hessian_in_leaf": 1e-6}, seed=0)
        selected = set(select_by_importance(split_importance(model)))

        assert {"x00", "x01", "x02"} <= selected
        assert len(selected - {"x00", "x01", "x02"}) <= 5


@pytest.mark.unit
class TestPersistence:
    """Test model files."""

    @pytest.mark.parametrize("kind,params", [
        ("random_forest", {"n_trees": 4}),
        ("svm_rbf", {}),
        ("gbdt", {"learning_rate": 0.1, "n_trees": 5}),
    ])
    def test_save_and_load(self, separable_table, tmp_path, kind, params):
        """Test that a reloaded model predicts identically."""
        model = train_model(separable_table, kind, params, seed=2)
        save_model(model, tmp_path / "model.json")
        loaded = load_model(tmp_path / "model.json")

        assert loaded.kind == kind
        assert loaded.feature_names == model.feature_names
        assert np.allclose(predict(loaded, separable_table)[1], predict(model, separable_table)[1])

    def test_load_errors(self, tmp_path):
        """Test missing, malformed and unsupported model files."""
        with pytest.raises(ValidationError, match="not found"):
            load_model(tmp_path / "absent.json")

        (tmp_path / "bad.json").write_text("{", encoding="utf-8")
        with pytest.raises(ValidationError, match="not valid JSON"):
            load_model(tmp_path / "bad.json")

        (tmp_path / "old.json").write_text(json.dumps({"schema_version": 0}), encoding="utf-8")
        with pytest.raises(ValidationError, match="schema version"):
            load_model(tmp_path / "old.json")
