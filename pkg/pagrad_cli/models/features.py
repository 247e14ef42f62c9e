"""Feature table models for pagrad CLI."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..exceptions import FeatureError, ValidationError

ID_COLUMNS = ("subject_id", "label")


@dataclass
class FeatureRow:
    """One subject's named features; insertion order is the column order."""

    subject_id: str
    label: int
    features: Dict[str, float] = field(default_factory=dict)

    def add(self, name: str, value: float) -> None:
        if name in self.features:
            raise FeatureError(f"duplicate feature name: {name}", code="DUPLICATE_FEATURE")
        value = float(value)
        if not np.isfinite(value):
            raise FeatureError(f"feature {name} is not finite", code="NON_FINITE_FEATURE")
        self.features[name] = value


@dataclass(eq=False)
class FeatureTable:
    """Rows of per-subject real features plus a binary label."""

    feature_names: List[str]
    values: np.ndarray
    subject_ids: List[str]
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.feature_names = [str(name) for name in self.feature_names]
        self.subject_ids = [str(s) for s in self.subject_ids]
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1 and values.size == 0:
            values = values.reshape(0, len(self.feature_names))
        if values.ndim != 2 or values.shape[1] != len(self.feature_names):
            raise ValidationError(
                f"feature matrix shape {values.shape} does not match {len(self.feature_names)} names",
                code="BAD_TABLE",
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValidationError("feature names must be unique", code="BAD_TABLE")
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != values.shape[0] or len(self.subject_ids) != values.shape[0]:
            raise ValidationError("subject ids, labels and rows must have equal length", code="BAD_TABLE")
        if not np.all(np.isin(labels, (0, 1))):
            raise ValidationError("labels must be 0 or 1", code="BAD_LABEL")
        if not np.all(np.isfinite(values)):
            raise ValidationError("feature values must be finite", code="NON_FINITE_FEATURE")
        self.values = values
        self.labels = labels

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def require_both_classes(self, min_per_class: int = 1) -> None:
        """Raise when either label has fewer than ``min_per_class`` rows."""
        counts = np.bincount(self.labels, minlength=2)
        if counts.min() < min_per_class:
            raise ValidationError(
                f"need at least {min_per_class} row(s) of each label, got {counts[0]} controls / {counts[1]} patients",
                code="SINGLE_CLASS",
            )

    def subset_rows(self, indices: Sequence[int]) -> "FeatureTable":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureTable(
            feature_names=list(self.feature_names),
            values=self.values[idx],
            subject_ids=[self.subject_ids[i] for i in idx],
            labels=self.labels[idx],
        )

    def select_columns(self, names: Sequence[str]) -> "FeatureTable":
        positions = {name: i for i, name in enumerate(self.feature_names)}
        missing = [name for name in names if name not in positions]
        if missing:
            raise ValidationError(f"unknown feature columns: {', '.join(missing[:5])}", code="UNKNOWN_FEATURE")
        cols = [positions[name] for name in names]
        return FeatureTable(
            feature_names=list(names),
            values=self.values[:, cols],
            subject_ids=list(self.subject_ids),
            labels=self.labels.copy(),
        )

    @classmethod
    def from_rows(cls, rows: Sequence[FeatureRow], feature_names: Optional[List[str]] = None) -> "FeatureTable":
        if not rows and feature_names is None:
            raise ValidationError("cannot build a feature table from zero rows", code="EMPTY_TABLE")
        names = list(feature_names) if feature_names is not None else list(rows[0].features)
        for row in rows:
            if list(row.features) != names:
                raise ValidationError(
                    f"row {row.subject_id} has a different feature schema", code="BAD_TABLE"
                )
        values = np.array([[row.features[n] for n in names] for row in rows], dtype=np.float64)
        return cls(
            feature_names=names,
            values=values.reshape(len(rows), len(names)),
            subject_ids=[row.subject_id for row in rows],
            labels=np.array([row.label for row in rows], dtype=np.int64),
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.feature_names)
        frame.insert(0, "label", self.labels)
        frame.insert(0, "subject_id", self.subject_ids)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "FeatureTable":
        missing = [c for c in ID_COLUMNS if c not in frame.columns]
        if missing:
            raise ValidationError(f"feature table is missing columns: {', '.join(missing)}", code="BAD_TABLE")
        names = [c for c in frame.columns if c not in ID_COLUMNS]
        return cls(
            feature_names=names,
            values=frame[names].to_numpy(dtype=np.float64),
            subject_ids=frame["subject_id"].astype(str).tolist(),
            labels=frame["label"].to_numpy(dtype=np.int64),
        )

    def to_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")

    @classmethod
    def from_csv(cls, path: Path) -> "FeatureTable":
        if not Path(path).exists():
            raise ValidationError(f"Feature table not found: {path}", code="FILE_NOT_FOUND")
        frame = pd.read_csv(path, dtype={"subject_id": str})
        return cls.from_frame(frame)


@dataclass(frozen=True)
class DropRecord:
    """One feature removal by the reduction rules."""

    feature: str
    rule: str
    statistic: float
    partner: str = ""
