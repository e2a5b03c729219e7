"""
Configuration Manager
Loads experiment configuration from YAML and runtime settings from environment variables
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional
import copy

import yaml
from pydantic import BaseModel, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv
from loguru import logger

from .utils import log_spaced_epochs


DEFAULT_CONFIG_PATH = Path(__file__).parent.parent / "config" / "config.yaml"


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables"""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=False, extra="ignore")

    analysis_threads: int = Field(1, alias="NC_THREADS", ge=1)
    log_level: str = Field("INFO", alias="NC_LOG_LEVEL")
    log_dir: str = Field("./logs", alias="NC_LOG_DIR")
    output_dir: str = Field("./outputs", alias="NC_OUTPUT_DIR")


class ModelConfig(BaseModel):
    depth: int = Field(6, ge=1)
    width: int = Field(64, ge=1)
    activation: Literal["relu", "tanh", "leakyrelu"] = "relu"
    leaky_slope: float = Field(0.01, gt=0.0)


class SyntheticSpec(BaseModel):
    """Gaussian mixture with class means on a scaled simplex"""
    class_count: int = Field(4, ge=2)
    input_dim: int = Field(32, ge=1)
    per_class_n: int = Field(500, ge=1)
    separation: float = Field(4.0, gt=0.0)
    std: float = Field(1.0, gt=0.0)
    seed: Optional[int] = None


class DataConfig(BaseModel):
    source: Literal["synthetic", "idx"] = "synthetic"
    images: Optional[Path] = None
    labels: Optional[Path] = None
    class_count: Optional[int] = Field(None, ge=2)
    per_class_n: Optional[int] = Field(None, ge=1)
    normalize: bool = True
    normalization: Literal["per_dimension", "global"] = "per_dimension"
    synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec)

    @model_validator(mode="after")
    def _check_idx_paths(self) -> "DataConfig":
        if self.source == "idx" and (self.images is None or self.labels is None):
            raise ValueError("data.source 'idx' requires data.images and data.labels")
        return self


class OptimizerConfig(BaseModel):
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(1e-5, ge=0.0)
    batch_size: int = Field(128, ge=1)


class ScheduleConfig(BaseModel):
    max_lr: float = Field(0.05, gt=0.0)
    warmup_fraction: float = Field(0.3, gt=0.0, lt=1.0)
    start_div: float = Field(25.0, ge=1.0)
    final_div: float = Field(1e4, ge=1.0)


class TrainingConfig(BaseModel):
    epochs: int = Field(300, ge=0)
    checkpoint_epochs: Optional[List[int]] = None
    show_progress: bool = True
    # Train on past the scheduled epochs until epoch ceil(tpt_factor * TPT)
    tpt_factor: Optional[float] = Field(None, ge=1.0)
    max_epochs: Optional[int] = Field(None, ge=0)
    extension_lr: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _resolve_checkpoints(self) -> "TrainingConfig":
        if self.max_epochs is not None and self.max_epochs < self.epochs:
            raise ValueError(f"training.max_epochs {self.max_epochs} is below training.epochs {self.epochs}")

        if self.checkpoint_epochs is None:
            self.checkpoint_epochs = log_spaced_epochs(self.epochs)
            return self

        outside = [e for e in self.checkpoint_epochs if not 0 <= e <= self.epochs]
        if outside:
            raise ValueError(f"Checkpoint epochs {outside} outside [0, {self.epochs}]")
        self.checkpoint_epochs = sorted(set(self.checkpoint_epochs) | {0})
        return self

    @property
    def epoch_limit(self) -> int:
        """Hard cap on epochs when training is extended past the schedule"""
        if self.tpt_factor is None:
            return self.epochs
        return self.max_epochs if self.max_epochs is not None else 4 * self.epochs


class AnalysisConfig(BaseModel):
    coord_cap: int = Field(2048, ge=1)
    rel_tol: Optional[float] = Field(None, gt=0.0)
    threads: Optional[int] = Field(None, ge=1)


class SeedConfig(BaseModel):
    model: int = 0
    data: int = 0
    subsample: int = 0


class ExperimentConfig(BaseModel):
    """Complete, validated experiment protocol"""
    name: str = "nc-depth"
    model: ModelConfig = Field(default_factory=ModelConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    seeds: SeedConfig = Field(default_factory=SeedConfig)


class ConfigManager:
    """Manages configuration from both YAML and dotted-key overrides"""

    def __init__(self, config_path: Optional[Path] = None):
        # Load environment variables
        load_dotenv()

        if config_path is None:
            config_path = DEFAULT_CONFIG_PATH

        self.config_path = Path(config_path)
        self.config = self._load_yaml_config()

    def _load_yaml_config(self) -> Dict[str, Any]:
        """Load configuration from YAML file"""
        if not self.config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")

        with open(self.config_path, 'r') as f:
            loaded = yaml.safe_load(f) or {}

        if not isinstance(loaded, dict):
            raise ValueError(f"Configuration file {self.config_path} must contain a mapping")
        return loaded

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dot-notation key (e.g., 'training.epochs')"""
        keys = key.split('.')
        value = self.config

        for k in keys:
            if isinstance(value, dict):
                value = value.get(k)
            else:
                return default

            if value is None:
                return default

        return value

    def set(self, key: str, value: Any) -> None:
        """Set configuration value by dot-notation key, creating sections as needed"""
        *sections, leaf = key.split('.')
        node = self.config
        for section in sections:
            child = node.get(section)
            if not isinstance(child, dict):
                child = {}
                node[section] = child
            node = child
        node[leaf] = value

    def apply_overrides(self, overrides: Dict[str, Any]) -> None:
        """
        Apply dotted-key overrides; overrides take precedence over file values

        Explicit checkpoint epochs beyond an overridden epoch count are dropped.
        """
        for key, value in overrides.items():
            if value is None:
                continue
            logger.debug(f"Config override {key} = {value!r}")
            self.set(key, value)

        epochs = overrides.get('training.epochs')
        checkpoints = self.get('training.checkpoint_epochs')
        if epochs is not None and checkpoints is not None:
            kept = [e for e in checkpoints if e <= epochs]
            if len(kept) != len(checkpoints):
                logger.info(f"Dropping checkpoint epochs beyond {epochs}: {sorted(set(checkpoints) - set(kept))}")
            self.set('training.checkpoint_epochs', kept)

    def build_experiment_config(self) -> ExperimentConfig:
        """Validate the merged configuration"""
        return ExperimentConfig.model_validate(copy.deepcopy(self.config))


# Global settings instance
settings = Settings()
