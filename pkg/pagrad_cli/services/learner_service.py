"""Feature reduction, classifier training, prediction and model persistence."""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from ..exceptions import ConfigurationError, FeatureError, ModelError, ValidationError
from ..logging_config import StructuredLogger
from ..models.features import DropRecord, FeatureTable
from ..models.trained_model import MODEL_SCHEMA_VERSION, TrainedModel
from .learners import BaseLearner, GBDTLearner, RandomForestLearner, SVMLearner

logger = StructuredLogger("learner_service")

LEARNERS: Dict[str, Type[BaseLearner]] = {
    "random_forest": RandomForestLearner,
    "svm_rbf": SVMLearner,
    "gbdt": GBDTLearner,
}

DEFAULT_PARAMS: Dict[str, Dict[str, Any]] = {
    "random_forest": {"n_trees": 100, "max_depth": None, "mtry": None, "bootstrap": True, "min_samples_split": 2},
    "svm_rbf": {"C": 1.0, "gamma": None, "tol": 1e-3, "max_iter": 100000},
    "gbdt": {
        "learning_rate": 0.01, "n_trees": 1000, "max_leaves": 31, "min_data_in_leaf": 2,
        "min_sum_hessian_in_leaf": 1e-3, "lambda_l2": 0.0, "min_gain_to_split": 0.0, "max_depth": None,
    },
}

DEFAULT_GRIDS: Dict[str, Dict[str, List[Any]]] = {
    "random_forest": {"n_trees": [100, 300], "max_depth": [None, 8]},
    "svm_rbf": {"C": [0.1, 1.0, 10.0], "gamma": [0.01, 0.1, 1.0]},
    "gbdt": {"learning_rate": [0.01], "n_trees": [1000], "max_leaves": [31]},
}


# ----------------------------------------------------------------------------
# correlation-based reduction
# ----------------------------------------------------------------------------

def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample correlation in [-1, 1]; 0 when either input is constant."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValidationError(f"length mismatch: {a.shape} vs {b.shape}", code="LENGTH_MISMATCH")
    if a.size < 2:
        raise ValidationError("pearson needs at least 2 samples", code="TOO_SHORT")
    ca, cb = a - a.mean(), b - b.mean()
    sxx, syy = float(np.dot(ca, ca)), float(np.dot(cb, cb))
    if sxx == 0.0 or syy == 0.0:
        return 0.0
    return float(np.clip(np.dot(ca, cb) / math.sqrt(sxx * syy), -1.0, 1.0))


def reduce_features(table: FeatureTable, target_min: float = 0.01,
                    pair_max: float = 0.95) -> Tuple[FeatureTable, List[DropRecord]]:
    """Drop |corr(feature, label)| < target_min, then greedily drop features with
    |corr| > pair_max against an already-kept feature.

    Candidates are scanned by descending |target correlation| (name ascending on ties);
    surviving columns keep their input order.
    """
    labels = table.labels.astype(np.float64)
    target = {name: pearson(table.column(name), labels) for name in table.feature_names}
    drops: List[DropRecord] = []

    candidates = []
    for name in table.feature_names:
        if abs(target[name]) < target_min:
            drops.append(DropRecord(feature=name, rule="target", statistic=target[name]))
        else:
            candidates.append(name)
    candidates.sort(key=lambda name: (-abs(target[name]), name))

    kept: List[str] = []
    for name in candidates:
        column = table.column(name)
        for other in kept:
            r = pearson(column, table.column(other))
            if abs(r) > pair_max:
                drops.append(DropRecord(feature=name, rule="pairwise", statistic=r, partner=other))
                break
        else:
            kept.append(name)

    if not kept:
        raise FeatureError(f"no features survive reduction ({table.n_features} dropped)", code="NO_FEATURES")
    survivors = set(kept)
    reduced = table.select_columns([name for name in table.feature_names if name in survivors])
    logger.debug("Reduced features", before=table.n_features, after=reduced.n_features)
    return reduced, drops


# ----------------------------------------------------------------------------
# training and prediction
# ----------------------------------------------------------------------------

def resolve_params(kind: str, params: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Defaults for ``kind`` overlaid with ``params``; unknown names are configuration errors."""
    if kind not in LEARNERS:
        raise ConfigurationError(f"unknown model kind '{kind}'", code="UNKNOWN_MODEL")
    resolved = dict(DEFAULT_PARAMS[kind])
    unknown = sorted(set(params or {}) - set(resolved))
    if unknown:
        raise ConfigurationError(f"unknown {kind} parameters: {', '.join(unknown)}", code="UNKNOWN_PARAM")
    resolved.update(params or {})
    return resolved


def train_model(table: FeatureTable, kind: str, params: Optional[Dict[str, Any]] = None,
                seed: int = 0) -> TrainedModel:
    """Fit a learner of ``kind`` on the whole table; deterministic given (table, params, seed)."""
    resolved = resolve_params(kind, params)
    if table.n_rows == 0:
        raise ModelError("cannot train on an empty table", code="EMPTY_TRAINING")
    estimator = LEARNERS[kind](**resolved).fit(table.values, table.labels, seed)
    diagnostics: Dict[str, Any] = {}
    if isinstance(estimator, SVMLearner):
        diagnostics = {"converged": estimator.converged, "iterations": estimator.iterations,
                       "support_vectors": int(estimator.dual_coef.size)}
    elif isinstance(estimator, GBDTLearner):
        diagnostics = {"trees_built": len(estimator.trees), "final_loss": estimator.loss_trace[-1]}
    return TrainedModel(
        kind=kind,
        params=resolved,
        feature_names=list(table.feature_names),
        seed=seed,
        estimator=estimator,
        training_rows=table.n_rows,
        diagnostics=diagnostics,
    )


def train_random_forest(table: FeatureTable, params: Optional[Dict[str, Any]] = None, seed: int = 0) -> TrainedModel:
    return train_model(table, "random_forest", params, seed)


def train_svm_rbf(table: FeatureTable, params: Optional[Dict[str, Any]] = None, seed: int = 0) -> TrainedModel:
    return train_model(table, "svm_rbf", params, seed)


def train_gbdt(table: FeatureTable, params: Optional[Dict[str, Any]] = None, seed: int = 0) -> TrainedModel:
    return train_model(table, "gbdt", params, seed)


def predict(model: TrainedModel, table: FeatureTable) -> Tuple[np.ndarray, np.ndarray]:
    """(labels, scores); the table's columns must equal the model's bound feature list."""
    if list(table.feature_names) != list(model.feature_names):
        raise ModelError(
            f"feature schema mismatch: model expects {len(model.feature_names)} bound features, "
            f"table has {table.n_features}",
            code="SCHEMA_MISMATCH",
        )
    return model.estimator.predict(table.values)


def split_importance(model: TrainedModel) -> Dict[str, int]:
    """Number of tree splits using each feature of a boosted model."""
    if not isinstance(model.estimator, GBDTLearner):
        raise ModelError(f"split importance needs a gbdt model, got {model.kind}", code="NOT_GBDT")
    counts = model.estimator.split_counts(len(model.feature_names))
    return {name: int(count) for name, count in zip(model.feature_names, counts)}


def select_by_importance(importance: Dict[str, int], threshold: int = 1) -> List[str]:
    """Features with split count >= threshold, in model feature order."""
    return [name for name, count in importance.items() if count >= threshold]


# ----------------------------------------------------------------------------
# persistence
# ----------------------------------------------------------------------------

def save_model(model: TrainedModel, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_text(json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise ModelError(f"Failed to write model {path}: {e}", code="WRITE_FAILED") from e


def load_model(path: Path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"Model file not found: {path}", code="FILE_NOT_FOUND")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"Model file {path} is not valid JSON: {e}", code="BAD_MODEL") from e
    if data.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValidationError(
            f"Unsupported model schema version {data.get('schema_version')} in {path}", code="BAD_MODEL"
        )
    kind = data.get("kind")
    if kind not in LEARNERS:
        raise ValidationError(f"Unknown model kind '{kind}' in {path}", code="BAD_MODEL")
    estimator = LEARNERS[kind].from_state(data["params"], data["state"])
    return TrainedModel(
        kind=kind,
        params=data["params"],
        feature_names=list(data["feature_names"]),
        seed=int(data["seed"]),
        estimator=estimator,
        training_rows=int(data.get("training_rows", 0)),
        diagnostics=data.get("diagnostics", {}),
    )
