"""统一配置管理 - 环境设置与运行配置，单一数据源."""

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError as PydanticValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError

REGIONS = ("left_cistern", "right_cistern", "bone", "corpus_callosum")
Region = Literal["left_cistern", "right_cistern", "bone", "corpus_callosum"]
ModelKind = Literal["random_forest", "svm_rbf", "gbdt"]
ResampleMethod = Literal["nearest", "trilinear", "cubic_bspline"]

FILTER_KINDS = ("original", "exponential", "logarithm", "square", "squareroot", "gradient", "log", "wavelet")
FEATURE_FAMILIES = ("firstorder", "glcm", "glrlm", "shape")


def get_project_root() -> Path:
    """获取项目根目录：向上查找包含pyproject.toml的目录."""
    current = Path(__file__).resolve()
    for parent in current.parents:
        if (parent / "pyproject.toml").exists():
            return parent
    return Path.cwd()


class Settings(BaseSettings):
    """进程级配置，按优先级：环境变量 > .env文件 > 默认值."""

    model_config = SettingsConfigDict(
        env_prefix="PAGRAD_",
        env_file=str(get_project_root() / ".env"),
        env_file_encoding="utf-8",
        extra="ignore",
    )

    debug: bool = False
    log_file: str = "pagrad_cli.log"
    workers: int = Field(default=1, ge=1)
    default_seed: int = Field(default=0, ge=0)

    def as_dict(self) -> Dict[str, Any]:
        """返回可写入报告头的配置快照."""
        return {
            "debug": self.debug,
            "workers": self.workers,
            "default_seed": self.default_seed,
        }


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """获取全局配置实例."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


class RunConfig(BaseModel):
    """Resolved configuration of one pipeline run."""

    model_config = {"extra": "forbid"}

    pipeline: Literal["pag", "radiomics"] = "pag"
    regions: List[Region] = Field(default_factory=lambda: list(REGIONS))
    fuse_regions: Tuple[Region, Region] = ("left_cistern", "right_cistern")

    # pag
    mi_bins: int = Field(default=16, ge=2)
    edge_threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    k_eigen: int = Field(default=8, ge=1)
    export_graphs: bool = False

    # radiomics
    zscore: bool = True
    resample_spacing: Optional[Tuple[float, float, float]] = None
    resample_method: ResampleMethod = "cubic_bspline"
    bin_count: int = Field(default=32, ge=2)
    filters: List[str] = Field(default_factory=lambda: list(FILTER_KINDS))
    log_sigmas: List[float] = Field(default_factory=lambda: [1.0, 2.0])
    families: List[str] = Field(default_factory=lambda: list(FEATURE_FAMILIES))
    target_min: float = Field(default=0.01, ge=0.0, le=1.0)
    pair_max: float = Field(default=0.95, ge=0.0, le=1.0)
    importance_threshold: int = Field(default=1, ge=0)
    selector_params: Dict[str, Any] = Field(default_factory=dict)
    holdout_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)

    # models and evaluation
    model_kind: Optional[ModelKind] = None
    model_params: Dict[str, Any] = Field(default_factory=dict)
    grid: Dict[str, List[Any]] = Field(default_factory=dict)
    use_default_grid: bool = False
    cv_k: int = Field(default=5, ge=2)
    n_repeats: int = Field(default=20, ge=1)

    seed: int = Field(default=0, ge=0)
    workers: Optional[int] = Field(default=None, ge=1)
    out_dir: Path = Path("results")
    timestamp: bool = True

    @field_validator("regions", "filters", "families", "log_sigmas", mode="before")
    @classmethod
    def _wrap_scalar(cls, value: Any) -> Any:
        if isinstance(value, (str, int, float)):
            return [value]
        return value

    @field_validator("filters")
    @classmethod
    def _check_filters(cls, value: List[str]) -> List[str]:
        unknown = [name for name in value if name not in FILTER_KINDS]
        if unknown:
            raise ValueError(f"unknown filters: {', '.join(unknown)}")
        return value

    @field_validator("families")
    @classmethod
    def _check_families(cls, value: List[str]) -> List[str]:
        unknown = [name for name in value if name not in FEATURE_FAMILIES]
        if unknown:
            raise ValueError(f"unknown feature families: {', '.join(unknown)}")
        return value

    @field_validator("log_sigmas")
    @classmethod
    def _check_sigmas(cls, value: List[float]) -> List[float]:
        if any(not math.isfinite(s) or s <= 0 for s in value):
            raise ValueError("LoG sigma must be positive")
        return value

    @field_validator("resample_spacing")
    @classmethod
    def _check_spacing(cls, value: Optional[Tuple[float, float, float]]) -> Optional[Tuple[float, float, float]]:
        if value is not None and any(s <= 0 for s in value):
            raise ValueError("resample spacing must be positive")
        return value

    @model_validator(mode="after")
    def _pipeline_defaults(self) -> "RunConfig":
        if self.model_kind is None:
            self.model_kind = "random_forest" if self.pipeline == "pag" else "gbdt"
        if not self.regions:
            raise ValueError("at least one region is required")
        if len(set(self.regions)) != len(self.regions):
            raise ValueError("regions must be unique")
        return self

    @property
    def kind(self) -> ModelKind:
        assert self.model_kind is not None
        return self.model_kind


def _coerce_scalar(raw: str) -> Any:
    value = raw.strip()
    lowered = value.lower()
    if lowered in ("none", "null", ""):
        return None
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def coerce_value(raw: str) -> Any:
    """Parse one config value: comma lists, none/true/false, ints and floats."""
    if "," in raw:
        return [_coerce_scalar(part) for part in raw.split(",")]
    return _coerce_scalar(raw)


def parse_key_values(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse key=value lines into a nested mapping (``grid.x`` / ``param.x`` / ``selector.x``)."""
    data: Dict[str, Any] = {}
    prefixes = {"grid.": "grid", "param.": "model_params", "selector.": "selector_params"}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected key=value, got '{line}'", code="BAD_LINE")
        key, raw = (part.strip() for part in line.split("=", 1))
        for prefix, target in prefixes.items():
            if key.startswith(prefix):
                value = coerce_value(raw)
                if target == "grid" and not isinstance(value, list):
                    value = [value]
                data.setdefault(target, {})[key[len(prefix):]] = value
                break
        else:
            data[key] = coerce_value(raw)
    return data


def build_run_config(values: Dict[str, Any]) -> RunConfig:
    """Validate a mapping into a RunConfig, converting pydantic errors to ConfigurationError."""
    try:
        return RunConfig(**values)
    except PydanticValidationError as e:
        raise ConfigurationError(f"Invalid run configuration: {e}", code="INVALID_CONFIG") from e


def load_run_config(path: Optional[Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Load a key=value config file (optional) and apply CLI overrides."""
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}", code="FILE_NOT_FOUND")
        values = parse_key_values(path.read_text(encoding="utf-8"), source=str(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return build_run_config(values)


def dump_run_config(config: RunConfig) -> Dict[str, Any]:
    """JSON-ready view of a RunConfig for report headers."""
    data = config.model_dump(mode="json")
    data.pop("timestamp", None)
    data.pop("workers", None)
    data.pop("out_dir", None)
    return data
