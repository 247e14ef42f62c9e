"""End-to-end pag and radiomics pipelines: manifest in, models and reports out."""

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from ..config import RunConfig
from ..exceptions import EvaluationError, FeatureError
from ..logging_config import StructuredLogger, bind_run
from ..models.evaluation import FoldMetrics, Metrics
from ..models.features import DropRecord, FeatureTable
from .evaluation_service import (
    CVResult,
    FoldSelection,
    FoldSelector,
    and_fuse,
    cohort_graph_report,
    cross_validate,
    fuse_scores,
    grid_search,
    holdout_split,
    metrics,
    stratified_kfold,
)
from .graph_service import GraphService
from .learner_service import (
    DEFAULT_GRIDS,
    predict,
    reduce_features,
    save_model,
    select_by_importance,
    split_importance,
    train_gbdt,
    train_model,
)
from .radiomics_service import RadiomicsService
from .report_service import report_header, write_csv, write_json
from .spectral_service import eigenvalue_frame, graph_features, stack_features
from .volume_service import VolumeService, load_manifest, normalize_max

logger = StructuredLogger("pipeline_service")

PREDICTION_COLUMNS = ["region", "split", "subject_id", "label", "fold", "predicted", "score"]


def radiomics_selector(config: RunConfig) -> FoldSelector:
    """Pearson reduction, then GBDT split-importance selection, fit on one training table."""

    def select(train: FeatureTable, seed: int) -> FoldSelection:
        reduced, drops = reduce_features(train, config.target_min, config.pair_max)
        selector_model = train_gbdt(reduced, config.selector_params, seed)
        importance = split_importance(selector_model)
        chosen = select_by_importance(importance, config.importance_threshold)
        drops = drops + [
            DropRecord(feature=name, rule="importance", statistic=float(count))
            for name, count in importance.items() if count < config.importance_threshold
        ]
        if not chosen:
            raise FeatureError(
                f"no features survive split-importance selection (threshold {config.importance_threshold})",
                code="NO_FEATURES",
            )
        return FoldSelection(features=chosen, drops=drops, importance=importance)

    return select


class PipelineService:
    """Runs one configured pipeline over every region of a manifest."""

    def __init__(self, config: RunConfig, workers: int = 1):
        self.config = config
        self.workers = max(1, workers)
        self.out_dir = Path(config.out_dir)

    # ------------------------------------------------------------------
    # shared steps
    # ------------------------------------------------------------------

    def _grid(self) -> Dict[str, List[Any]]:
        if self.config.grid:
            return self.config.grid
        if self.config.use_default_grid:
            return DEFAULT_GRIDS[self.config.kind]
        return {}

    def _evaluate(self, table: FeatureTable, selector: Optional[FoldSelector]) -> Tuple[CVResult, List[Dict[str, Any]]]:
        """Cross-validate the configured model, with grid search when a grid is set."""
        plan = stratified_kfold(table.labels, self.config.cv_k, self.config.seed)
        grid = self._grid()
        if not grid:
            result = cross_validate(table, self.config.kind, self.config.model_params, plan=plan,
                                    seed=self.config.seed, selector=selector, workers=self.workers)
            return result, []
        search = grid_search(table, self.config.kind, grid, base_params=self.config.model_params, plan=plan,
                             seed=self.config.seed, selector=selector, workers=self.workers)
        points = [{"params": params, "mean_f1": f1} for params, f1 in search.points]
        return search.best, points

    def _region_entry(self, table: FeatureTable, result: CVResult, grid_points: List[Dict[str, Any]]) -> Dict[str, Any]:
        return {
            "n_subjects": table.n_rows,
            "n_features": table.n_features,
            "model": {"kind": self.config.kind, "params": result.params},
            "grid_search": grid_points,
            "cv": result.metrics.as_dict(),
        }

    @staticmethod
    def _tag(predictions: pd.DataFrame, region: str, split: str) -> pd.DataFrame:
        tagged = predictions.copy()
        tagged.insert(0, "split", split)
        tagged.insert(0, "region", region)
        return tagged[PREDICTION_COLUMNS]

    def _fuse(self, predictions: pd.DataFrame, split: str) -> Optional[Tuple[pd.DataFrame, Metrics, Dict[str, int]]]:
        """AND-fuse the two configured regions' predictions for one split."""
        left_region, right_region = self.config.fuse_regions
        part = predictions[predictions["split"] == split]
        left = part[part["region"] == left_region].sort_values("subject_id").reset_index(drop=True)
        right = part[part["region"] == right_region].sort_values("subject_id").reset_index(drop=True)
        if left.empty or right.empty:
            return None
        if list(left["subject_id"]) != list(right["subject_id"]) or list(left["label"]) != list(right["label"]):
            raise EvaluationError(
                f"cannot fuse {left_region} and {right_region}: subjects or labels differ", code="FUSION_MISMATCH"
            )
        fused = left[["subject_id", "label", "fold"]].copy()
        fused["predicted"] = and_fuse(left["predicted"], right["predicted"])
        fused["score"] = fuse_scores(left["score"], right["score"])
        fold_metrics: List[FoldMetrics] = [
            metrics(group["label"], group["predicted"], group["score"])
            for _, group in fused.groupby("fold", sort=True)
        ]
        false_positives = {
            left_region: int(((left["label"] == 0) & (left["predicted"] == 1)).sum()),
            right_region: int(((right["label"] == 0) & (right["predicted"] == 1)).sum()),
            "fused": int(((fused["label"] == 0) & (fused["predicted"] == 1)).sum()),
        }
        return self._tag(fused, "fused", split), Metrics(fold_metrics), false_positives

    def _fusion_block(self, predictions: pd.DataFrame, splits: Tuple[str, ...]) -> Tuple[Optional[Dict[str, Any]], List[pd.DataFrame]]:
        block: Dict[str, Any] = {"regions": list(self.config.fuse_regions)}
        frames = []
        for split in splits:
            fused = self._fuse(predictions, split)
            if fused is None:
                return None, []
            frame, fused_metrics, false_positives = fused
            frames.append(frame)
            if split == "cv":
                block["cv"] = fused_metrics.as_dict()
                block["false_positives"] = false_positives
            else:
                block[split] = fused_metrics.folds[0].as_dict()
                block[f"{split}_false_positives"] = false_positives
        logger.info("Fused cistern predictions", regions=block["regions"],
                    fused_fp=block["false_positives"]["fused"])
        return block, frames

    # ------------------------------------------------------------------
    # pag pipeline
    # ------------------------------------------------------------------

    def run_pag(self, manifest_path: Path) -> Dict[str, Any]:
        """ROI → MI graph → spectral features → CV per region → AND-fusion → reports."""
        cfg = self.config
        rows = load_manifest(manifest_path)
        volumes = VolumeService()
        graph_service = GraphService(
            bins=cfg.mi_bins,
            threshold=cfg.edge_threshold,
            export_dir=self.out_dir / "graphs" if cfg.export_graphs else None,
        )
        report = report_header(cfg)
        report["regions"] = {}
        report["region_order"] = list(cfg.regions)
        summary_frames, report_frames, prediction_frames = [], [], []

        for region in cfg.regions:
            patches = [normalize_max(p) for p in volumes.region_patches(rows, region)]
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                processed = list(pool.map(graph_service.process, patches))
            vectors = [
                graph_features(graph, cfg.k_eigen, patch.subject_id, patch.label)
                for patch, (graph, _, _) in zip(patches, processed)
            ]
            table = stack_features(vectors)
            write_csv(table.to_frame(), self.out_dir / f"features_{region}.csv")
            write_csv(eigenvalue_frame(vectors), self.out_dir / f"eigenvalues_{region}.csv")

            summaries = [summary for _, summary, _ in processed]
            summary_frame = pd.DataFrame([
                {"region": region, "subject_id": p.subject_id, "label": p.label, **s.as_dict(),
                 "n_components": d.n_components, "is_connected": d.is_connected}
                for p, (_, s, d) in zip(patches, processed)
            ])
            graph_report = cohort_graph_report(summaries, [p.label for p in patches])
            graph_report.insert(0, "region", region)
            summary_frames.append(summary_frame)
            report_frames.append(graph_report)

            result, grid_points = self._evaluate(table, selector=None)
            prediction_frames.append(self._tag(result.predictions, region, "cv"))
            model = train_model(table, cfg.kind, result.params, cfg.seed)
            save_model(model, self.out_dir / "models" / f"{region}.json")

            entry = self._region_entry(table, result, grid_points)
            entry["graph_report"] = graph_report.drop(columns="region").to_dict(orient="records")
            entry["disconnected_graphs"] = int((~summary_frame["is_connected"]).sum())
            report["regions"][region] = entry
            logger.info("Region finished", pipeline="pag", region=region, mean_f1=round(result.metrics.mean_f1, 4))

        predictions = pd.concat(prediction_frames, ignore_index=True)
        fusion, fused_frames = self._fusion_block(predictions, ("cv",))
        if fusion is not None:
            report["fusion"] = fusion
            predictions = pd.concat([predictions, *fused_frames], ignore_index=True)

        write_csv(predictions, self.out_dir / "predictions.csv")
        write_csv(pd.concat(summary_frames, ignore_index=True), self.out_dir / "graph_summaries.csv")
        write_csv(pd.concat(report_frames, ignore_index=True), self.out_dir / "graph_report.csv")
        write_json(report, self.out_dir / "report.json")
        return report

    # ------------------------------------------------------------------
    # radiomics pipeline
    # ------------------------------------------------------------------

    def run_radiomics(self, manifest_path: Path) -> Dict[str, Any]:
        """ROI → z-score → filters → features → holdout + per-fold reduction CV → reports."""
        cfg = self.config
        rows = load_manifest(manifest_path)
        volumes = VolumeService(resample_spacing=cfg.resample_spacing, resample_method=cfg.resample_method)
        radiomics = RadiomicsService.from_config(cfg)
        selector = radiomics_selector(cfg)
        report = report_header(cfg)
        report["regions"] = {}
        report["region_order"] = list(cfg.regions)
        report["features_manifest"] = radiomics.features_manifest()
        write_json(radiomics.features_manifest(), self.out_dir / "features_manifest.json")
        prediction_frames, frequency_frames = [], []

        for region in cfg.regions:
            table = radiomics.extract_table(volumes.region_patches(rows, region), workers=self.workers)
            write_csv(table.to_frame(), self.out_dir / f"features_{region}.csv")

            train, test = holdout_split(table, cfg.holdout_fraction, cfg.seed)
            result, grid_points = self._evaluate(train, selector)
            prediction_frames.append(self._tag(result.predictions, region, "cv"))

            final = selector(train, cfg.seed)
            model = train_model(train.select_columns(final.features), cfg.kind, result.params, cfg.seed)
            save_model(model, self.out_dir / "models" / f"{region}.json")
            test_view = test.select_columns(final.features)
            labels, scores = predict(model, test_view)
            holdout = metrics(test_view.labels, labels, scores)
            holdout_frame = pd.DataFrame({
                "subject_id": test_view.subject_ids, "label": test_view.labels, "fold": -1,
                "predicted": labels, "score": scores,
            })
            prediction_frames.append(self._tag(holdout_frame, region, "holdout"))

            drop_frames = [self._drop_frame(sel.drops, f"fold_{i}") for i, sel in enumerate(result.selections)]
            drop_frames.append(self._drop_frame(final.drops, "final"))
            write_csv(pd.concat(drop_frames, ignore_index=True), self.out_dir / f"drop_log_{region}.csv")

            counts = Counter(name for sel in result.selections for name in sel.features)
            frequency_frames.append(pd.DataFrame([
                {"region": region, "feature": name, "count": count, "fraction": count / len(result.selections)}
                for name, count in sorted(counts.items(), key=lambda item: (-item[1], item[0]))
            ], columns=["region", "feature", "count", "fraction"]))

            entry = self._region_entry(train, result, grid_points)
            entry["n_subjects"] = table.n_rows
            entry["holdout"] = holdout.as_dict()
            entry["n_train"], entry["n_test"] = train.n_rows, test.n_rows
            entry["selected_features"] = list(final.features)
            entry["fold_feature_counts"] = [len(sel.features) for sel in result.selections]
            report["regions"][region] = entry
            logger.info("Region finished", pipeline="radiomics", region=region,
                        mean_f1=round(result.metrics.mean_f1, 4), holdout_f1=round(holdout.f1, 4))

        predictions = pd.concat(prediction_frames, ignore_index=True)
        fusion, fused_frames = self._fusion_block(predictions, ("cv", "holdout"))
        if fusion is not None:
            report["fusion"] = fusion
            predictions = pd.concat([predictions, *fused_frames], ignore_index=True)

        write_csv(predictions, self.out_dir / "predictions.csv")
        write_csv(pd.concat(frequency_frames, ignore_index=True), self.out_dir / "selection_frequency.csv")
        write_json(report, self.out_dir / "report.json")
        return report

    @staticmethod
    def _drop_frame(drops: List[DropRecord], stage: str) -> pd.DataFrame:
        return pd.DataFrame(
            [{"stage": stage, "feature": d.feature, "rule": d.rule, "statistic": d.statistic, "partner": d.partner}
             for d in drops],
            columns=["stage", "feature", "rule", "statistic", "partner"],
        )

    def run(self, manifest_path: Path) -> Dict[str, Any]:
        with bind_run(pipeline=self.config.pipeline, seed=self.config.seed):
            if self.config.pipeline == "pag":
                return self.run_pag(manifest_path)
            return self.run_radiomics(manifest_path)
