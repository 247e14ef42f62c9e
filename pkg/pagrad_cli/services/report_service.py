"""Run reports: JSON documents plus tidy CSV companions."""

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd

from .. import __version__
from ..config import RunConfig, dump_run_config
from ..exceptions import EvaluationError, ValidationError
from ..logging_config import StructuredLogger

logger = StructuredLogger("report_service")

REPORT_SCHEMA_VERSION = 1


def report_header(config: RunConfig) -> Dict[str, Any]:
    """Provenance block: schema, pipeline, reduction scope, resolved config, version, time."""
    header: Dict[str, Any] = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "pipeline": config.pipeline,
        "reduction_scope": "per_fold",
        "config": dump_run_config(config),
        "version": __version__,
    }
    if config.timestamp:
        header["created_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return header


def write_json(data: Dict[str, Any], path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    except (OSError, ValueError) as e:
        raise EvaluationError(f"Failed to write {path}: {e}", code="WRITE_FAILED") from e
    return path


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise EvaluationError(f"Failed to write {path}: {e}", code="WRITE_FAILED") from e
    return path


def load_report(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"Report not found: {path}", code="FILE_NOT_FOUND")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"Report {path} is not valid JSON: {e}", code="BAD_REPORT") from e
    if data.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValidationError(f"Unsupported report schema version in {path}", code="BAD_REPORT")
    return data


def summary_rows(report: Dict[str, Any]) -> List[Dict[str, Any]]:
    """One row per region in run order (then fusion) with mean CV scores and holdout F1 when present."""
    rows = []
    regions = report.get("regions", {})
    # region keys are sorted on disk; region_order keeps the configured order
    order = [r for r in report.get("region_order", []) if r in regions]
    order += [r for r in regions if r not in order]
    for region in order:
        entry = regions[region]
        cv = entry["cv"]
        rows.append({
            "region": region,
            "model": entry["model"]["kind"],
            "features": entry["n_features"],
            "accuracy": cv["mean_accuracy"],
            "f1": cv["mean_f1"],
            "auroc": cv["mean_auroc"],
            "holdout_f1": entry.get("holdout", {}).get("f1"),
        })
    fusion = report.get("fusion")
    if fusion:
        rows.append({
            "region": "+".join(fusion["regions"]) + " (AND)",
            "model": "fused",
            "features": None,
            "accuracy": fusion["cv"]["mean_accuracy"],
            "f1": fusion["cv"]["mean_f1"],
            "auroc": fusion["cv"]["mean_auroc"],
            "holdout_f1": fusion.get("holdout", {}).get("f1"),
        })
    return rows
