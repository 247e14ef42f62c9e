"""Trained classifier model for pagrad CLI."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

MODEL_SCHEMA_VERSION = 1


@dataclass(eq=False)
class TrainedModel:
    """A fitted classifier bound to the feature names (and order) it was trained on."""

    kind: str
    params: Dict[str, Any]
    feature_names: List[str]
    seed: int
    estimator: Any = field(repr=False)
    training_rows: int = 0
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "feature_names": list(self.feature_names),
            "training_rows": self.training_rows,
            "diagnostics": self.diagnostics,
            "state": self.estimator.to_state(),
        }

    def describe(self, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        info = {"kind": self.kind, "params": self.params, "seed": self.seed, "n_features": len(self.feature_names)}
        info.update(extra or {})
        return info
