"""Fold plans, metrics, cross-validation, grid search, fusion and permutation importance."""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from ..exceptions import EvaluationError, ValidationError
from ..logging_config import StructuredLogger
from ..models.evaluation import FoldMetrics, FoldPlan, Metrics
from ..models.features import DropRecord, FeatureTable
from ..models.graph import GraphSummary
from ..models.trained_model import TrainedModel
from .learner_service import predict, resolve_params, train_model

logger = StructuredLogger("evaluation_service")

GROUP_NAMES = {0: "control", 1: "patient"}
SUMMARY_STATISTICS = ("num_edges", "num_active_nodes", "avg_edge_weight")


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for a (seed, keys...) stream, independent of scheduling."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


# ----------------------------------------------------------------------------
# splitting
# ----------------------------------------------------------------------------

def stratified_kfold(labels: Sequence[int], k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle each class with one seeded generator, then deal rows round-robin into k folds.

    Classes are dealt in sorted order and each continues from the fold where the previous stopped.
    """
    y = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}", code="BAD_K")
    rng = np.random.default_rng(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < k:
            raise ValidationError(
                f"class {int(cls)} has {members.size} rows, fewer than k={k} folds", code="CLASS_TOO_SMALL"
            )
        for i, row in enumerate(rng.permutation(members)):
            folds[(offset + i) % k].append(int(row))
        offset += members.size
    return FoldPlan(folds=[sorted(f) for f in folds], seed=seed, stratified=True)


def holdout_indices(labels: Sequence[int], test_fraction: float = 0.2, seed: int = 0) -> Tuple[List[int], List[int]]:
    """Stratified (train, test) row indices; per-class test count is round(fraction · n), min 1."""
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError(f"test fraction must lie in (0, 1), got {test_fraction}", code="BAD_FRACTION")
    y = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    train: List[int] = []
    test: List[int] = []
    for cls in np.unique(y):
        members = rng.permutation(np.flatnonzero(y == cls))
        n_test = max(1, int(np.floor(test_fraction * members.size + 0.5)))
        if n_test >= members.size:
            raise ValidationError(
                f"class {int(cls)} has {members.size} rows, too few for a {test_fraction} holdout",
                code="CLASS_TOO_SMALL",
            )
        test.extend(int(i) for i in members[:n_test])
        train.extend(int(i) for i in members[n_test:])
    return sorted(train), sorted(test)


def holdout_split(table: FeatureTable, test_fraction: float = 0.2, seed: int = 0) -> Tuple[FeatureTable, FeatureTable]:
    train, test = holdout_indices(table.labels, test_fraction, seed)
    return table.subset_rows(train), table.subset_rows(test)


# ----------------------------------------------------------------------------
# metrics
# ----------------------------------------------------------------------------

def auroc(y_true: Sequence[int], scores: Sequence[float]) -> Optional[float]:
    """Mann-Whitney U / (n+ · n-) with midranks; None when only one class is present."""
    y = np.asarray(y_true, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s, method="average")
    u = float(ranks[y == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def f1_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = int(np.count_nonzero((y_true == 1) & (y_pred == 1)))
    fp = int(np.count_nonzero((y_true == 0) & (y_pred == 1)))
    fn = int(np.count_nonzero((y_true == 1) & (y_pred == 0)))
    denominator = 2 * tp + fp + fn
    return 2.0 * tp / denominator if denominator else 0.0


def metrics(y_true: Sequence[int], y_pred: Sequence[int], scores: Sequence[float]) -> FoldMetrics:
    """Accuracy, binary F1 (positive class 1, 0 on an empty denominator), AUROC and confusion counts."""
    yt = np.asarray(y_true, dtype=np.int64)
    yp = np.asarray(y_pred, dtype=np.int64)
    if yt.shape != yp.shape or yt.shape != np.shape(scores):
        raise ValidationError("y_true, y_pred and scores must have equal lengths", code="LENGTH_MISMATCH")
    if yt.size == 0:
        raise EvaluationError("cannot score an empty prediction set", code="EMPTY_PREDICTIONS")
    return FoldMetrics(
        accuracy=float(np.mean(yt == yp)),
        f1=f1_score(yt, yp),
        auroc=auroc(yt, scores),
        tp=int(np.count_nonzero((yt == 1) & (yp == 1))),
        fp=int(np.count_nonzero((yt == 0) & (yp == 1))),
        tn=int(np.count_nonzero((yt == 0) & (yp == 0))),
        fn=int(np.count_nonzero((yt == 1) & (yp == 0))),
    )


# ----------------------------------------------------------------------------
# cross-validation and grid search
# ----------------------------------------------------------------------------

@dataclass
class FoldSelection:
    """Columns a training fold keeps, with the reasons for everything dropped."""

    features: List[str]
    drops: List[DropRecord] = field(default_factory=list)
    importance: Dict[str, int] = field(default_factory=dict)


FoldSelector = Callable[[FeatureTable, int], FoldSelection]


@dataclass
class CVResult:
    """Per-fold metrics, out-of-fold predictions and per-fold selections."""

    params: Dict[str, Any]
    metrics: Metrics
    predictions: pd.DataFrame
    selections: List[FoldSelection] = field(default_factory=list)


def _fit_and_score(table: FeatureTable, kind: str, params: Dict[str, Any], train_idx: List[int],
                   test_idx: List[int], seed: int, selector: Optional[FoldSelector]
                   ) -> Tuple[FoldMetrics, np.ndarray, np.ndarray, Optional[FoldSelection]]:
    train, test = table.subset_rows(train_idx), table.subset_rows(test_idx)
    selection = None
    if selector is not None:
        # reduction is fit on the training fold only
        selection = selector(train, seed)
        train = train.select_columns(selection.features)
        test = test.select_columns(selection.features)
    model = train_model(train, kind, params, seed)
    labels, scores = predict(model, test)
    return metrics(test.labels, labels, scores), labels, scores, selection


def cross_validate(table: FeatureTable, kind: str, params: Optional[Dict[str, Any]] = None,
                   plan: Optional[FoldPlan] = None, k: int = 5, seed: int = 0,
                   selector: Optional[FoldSelector] = None, workers: int = 1, grid_index: int = 0) -> CVResult:
    """Train on k-1 folds, test on the held-out fold; folds may run on ``workers`` threads."""
    table.require_both_classes()
    plan = plan or stratified_kfold(table.labels, k, seed)
    resolved = resolve_params(kind, params)

    def run(fold: int):
        return _fit_and_score(table, kind, resolved, plan.train_indices(fold), plan.test_indices(fold),
                              derive_seed(seed, fold, grid_index), selector)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(run, range(plan.k)))

    rows = []
    for fold, (_, labels, scores, _) in enumerate(outcomes):
        for position, row in enumerate(plan.test_indices(fold)):
            rows.append({
                "subject_id": table.subject_ids[row],
                "label": int(table.labels[row]),
                "fold": fold,
                "predicted": int(labels[position]),
                "score": float(scores[position]),
            })
    predictions = pd.DataFrame(rows, columns=["subject_id", "label", "fold", "predicted", "score"])
    predictions = predictions.sort_values("subject_id", kind="stable").reset_index(drop=True)
    result = CVResult(
        params=resolved,
        metrics=Metrics([o[0] for o in outcomes]),
        predictions=predictions,
        selections=[o[3] for o in outcomes if o[3] is not None],
    )
    logger.info("Cross-validation finished", kind=kind, folds=plan.k, mean_f1=round(result.metrics.mean_f1, 4))
    return result


def _canonical_key(value: Any) -> Tuple[int, Any]:
    if value is None:
        return (0, 0)
    if isinstance(value, bool):
        return (1, int(value))
    if isinstance(value, (int, float)):
        return (2, value)
    return (3, str(value))


def expand_grid(grid: Dict[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    """Cartesian product in lexicographic order: sorted names, canonically sorted values."""
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise EvaluationError("grid search needs a non-empty grid", code="EMPTY_GRID")
    names = sorted(grid)
    axes = [sorted(set(grid[name]), key=_canonical_key) for name in names]
    return [dict(zip(names, point)) for point in itertools.product(*axes)]


@dataclass
class GridSearchResult:
    best_params: Dict[str, Any]
    best_f1: float
    best: CVResult
    points: List[Tuple[Dict[str, Any], float]]


def grid_search(table: FeatureTable, kind: str, grid: Dict[str, Sequence[Any]],
                base_params: Optional[Dict[str, Any]] = None, plan: Optional[FoldPlan] = None, k: int = 5,
                seed: int = 0, selector: Optional[FoldSelector] = None, workers: int = 1) -> GridSearchResult:
    """Maximize mean CV F1 over the grid; the first point in grid order wins ties."""
    plan = plan or stratified_kfold(table.labels, k, seed)
    best: Optional[CVResult] = None
    best_point: Dict[str, Any] = {}
    points: List[Tuple[Dict[str, Any], float]] = []
    for index, point in enumerate(expand_grid(grid)):
        params = {**(base_params or {}), **point}
        result = cross_validate(table, kind, params, plan=plan, seed=seed, selector=selector,
                                workers=workers, grid_index=index)
        points.append((point, result.metrics.mean_f1))
        if best is None or result.metrics.mean_f1 > best.metrics.mean_f1:
            best, best_point = result, point
    assert best is not None
    logger.info("Grid search finished", kind=kind, points=len(points), best=best_point,
                best_f1=round(best.metrics.mean_f1, 4))
    return GridSearchResult(best_params=best.params, best_f1=best.metrics.mean_f1, best=best, points=points)


# ----------------------------------------------------------------------------
# fusion and explainability
# ----------------------------------------------------------------------------

def and_fuse(pred_left: Sequence[int], pred_right: Sequence[int]) -> np.ndarray:
    """Positive only where both predictions are positive."""
    left = np.asarray(pred_left, dtype=np.int64)
    right = np.asarray(pred_right, dtype=np.int64)
    if left.shape != right.shape:
        raise ValidationError(f"length mismatch: {left.shape} vs {right.shape}", code="LENGTH_MISMATCH")
    return ((left == 1) & (right == 1)).astype(np.int64)


def fuse_scores(score_left: Sequence[float], score_right: Sequence[float]) -> np.ndarray:
    """Ranking score for the fused prediction: the smaller of the two scores."""
    return np.minimum(np.asarray(score_left, dtype=np.float64), np.asarray(score_right, dtype=np.float64))


def permutation_importance(model: TrainedModel, table: FeatureTable, n_repeats: int = 20, seed: int = 0,
                           workers: int = 1) -> pd.DataFrame:
    """Mean and std of the F1 drop when one column is permuted; ranked by mean drop."""
    if n_repeats < 1:
        raise ValidationError(f"n_repeats must be >= 1, got {n_repeats}", code="BAD_REPEATS")
    labels, _ = predict(model, table)
    baseline = f1_score(table.labels, labels)

    def drops_for(position: int) -> List[float]:
        values = []
        for repeat in range(n_repeats):
            rng = np.random.default_rng([seed, position, repeat])
            shuffled = table.values.copy()
            shuffled[:, position] = shuffled[rng.permutation(table.n_rows), position]
            permuted, _ = model.estimator.predict(shuffled)
            values.append(baseline - f1_score(table.labels, permuted))
        return values

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        all_drops = list(pool.map(drops_for, range(table.n_features)))

    frame = pd.DataFrame({
        "feature": table.feature_names,
        "mean_drop": [float(np.mean(d)) for d in all_drops],
        "std_drop": [float(np.std(d)) for d in all_drops],
    })
    frame = frame.sort_values(["mean_drop", "feature"], ascending=[False, True], kind="stable").reset_index(drop=True)
    frame["rank"] = np.arange(1, len(frame) + 1)
    return frame


def _five_numbers(values: Sequence[float]) -> Dict[str, float]:
    q = np.percentile(np.asarray(values, dtype=np.float64), [0, 25, 50, 75, 100])
    return {"min": float(q[0]), "q1": float(q[1]), "median": float(q[2]), "q3": float(q[3]), "max": float(q[4])}


def cohort_graph_report(summaries: Sequence[GraphSummary], labels: Sequence[int]) -> pd.DataFrame:
    """Tidy per-group min/Q1/median/Q3/max of each graph statistic."""
    y = np.asarray(labels, dtype=np.int64)
    if len(summaries) != y.size:
        raise ValidationError("summaries and labels must have equal lengths", code="LENGTH_MISMATCH")
    rows = []
    for label, group in GROUP_NAMES.items():
        members = [s for s, lab in zip(summaries, y) if lab == label]
        if not members:
            raise EvaluationError(f"no subjects in the {group} group", code="EMPTY_GROUP")
        for statistic in SUMMARY_STATISTICS:
            rows.append({"group": group, "statistic": statistic,
                         **_five_numbers([s.as_dict()[statistic] for s in members])})
    return pd.DataFrame(rows, columns=["group", "statistic", "min", "q1", "median", "q3", "max"])


def feature_distributions(table: FeatureTable, features: Sequence[str]) -> pd.DataFrame:
    """Tidy per-group min/Q1/median/Q3/max of the named feature columns."""
    rows = []
    for name in features:
        column = table.column(name)
        for label, group in GROUP_NAMES.items():
            values = column[table.labels == label]
            if values.size == 0:
                continue
            rows.append({"feature": name, "group": group, **_five_numbers(values)})
    return pd.DataFrame(rows, columns=["feature", "group", "min", "q1", "median", "q3", "max"])
