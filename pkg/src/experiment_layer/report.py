"""
NC Report
Per-checkpoint, per-layer collapse metric time series with TPT detection
and layer-depth trend summaries
"""

from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from loguru import logger

from ..metrics_layer import LayerMetrics


METRIC_NAMES = ("nc1", "nc2_norms", "nc2_angles", "nc4")
PLATEAU_REL_CHANGE = 0.1


class CheckpointRecord(BaseModel):
    """One NC-analysis step: training error plus metrics of every hidden layer"""
    epoch: int = Field(ge=0)
    train_error: float = Field(ge=0.0, le=1.0)
    train_loss: float = Field(ge=0.0)
    layers: List[LayerMetrics]

    def metric_series(self, metric: str) -> List[float]:
        """Values of one metric ordered by layer depth"""
        return [getattr(layer, metric) for layer in self.layers]


class NcReport(BaseModel):
    """Append-only, epoch-ordered collapse time series of one experiment"""
    name: str = "nc-depth"
    config: Dict[str, Any] = Field(default_factory=dict)
    config_fingerprint: str = ""
    dataset: Dict[str, Any] = Field(default_factory=dict)
    coord_cap: Optional[int] = None
    checkpoints: List[CheckpointRecord] = Field(default_factory=list)
    tpt_epoch: Optional[int] = None
    tpt_rebound: bool = False

    @model_validator(mode="after")
    def _check_ordering(self) -> "NcReport":
        epochs = [c.epoch for c in self.checkpoints]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError(f"Checkpoint epochs must be strictly increasing, got {epochs}")
        depths = {len(c.layers) for c in self.checkpoints}
        if len(depths) > 1:
            raise ValueError(f"Layer count differs across checkpoints: {sorted(depths)}")
        return self

    @property
    def final_checkpoint(self) -> CheckpointRecord:
        if not self.checkpoints:
            raise ValueError("Report has no checkpoints")
        return self.checkpoints[-1]

    @property
    def layer_count(self) -> int:
        return len(self.checkpoints[0].layers) if self.checkpoints else 0

    def append_checkpoint(self, record: CheckpointRecord) -> None:
        """
        Append a checkpoint, keeping epochs increasing and depth constant

        Updates tpt_epoch / tpt_rebound.
        """
        if self.checkpoints and record.epoch <= self.checkpoints[-1].epoch:
            raise ValueError(f"Checkpoint epoch {record.epoch} not after {self.checkpoints[-1].epoch}")
        if self.checkpoints and len(record.layers) != self.layer_count:
            raise ValueError(f"Checkpoint has {len(record.layers)} layers, report has {self.layer_count}")

        self.checkpoints.append(record)
        self.tpt_epoch = detect_tpt(self)

        if self.tpt_epoch is not None and record.train_error > 0.0 and not self.tpt_rebound:
            logger.warning(
                f"Train error rebounded to {record.train_error:.4f} at epoch {record.epoch} "
                f"after reaching zero at epoch {self.tpt_epoch}"
            )
            self.tpt_rebound = True


class MetricTrend(BaseModel):
    """Layer-depth profile of one metric at one checkpoint"""
    metric: str
    values: List[float]
    first_to_last_ratio: Optional[float]
    layer_deltas: List[float]
    plateau_onset: int


class TrendSummary(BaseModel):
    epoch: int
    layer_count: int
    metrics: Dict[str, MetricTrend]


def detect_tpt(report: NcReport) -> Optional[int]:
    """
    First checkpoint epoch with zero training error

    Returns:
        The epoch, or None when training error never reached zero
    """
    if not report.checkpoints:
        raise ValueError("Cannot detect TPT on an empty report")
    for checkpoint in report.checkpoints:
        if checkpoint.train_error == 0.0:
            return checkpoint.epoch
    return None


def _relative_changes(values: List[float]) -> List[float]:
    changes = []
    for before, after in zip(values, values[1:]):
        if before == 0.0:
            changes.append(0.0 if after == 0.0 else float('inf'))
        else:
            changes.append(abs(after - before) / abs(before))
    return changes


def plateau_onset(values: List[float], threshold: float = PLATEAU_REL_CHANGE) -> int:
    """
    First layer (1-based) after which every successive relative change is below threshold

    The last layer is returned when no earlier plateau exists.
    """
    if not values:
        raise ValueError("Cannot locate a plateau in an empty series")
    onset = len(values)
    for i, change in reversed(list(enumerate(_relative_changes(values)))):
        if change >= threshold:
            break
        onset = i + 1
    return onset


def _metric_trend(metric: str, values: List[float]) -> MetricTrend:
    first, last = values[0], values[-1]
    if first != 0.0:
        ratio = last / first
    else:
        ratio = 1.0 if last == 0.0 else None

    return MetricTrend(
        metric=metric,
        values=values,
        first_to_last_ratio=ratio,
        layer_deltas=np.diff(values).tolist(),
        plateau_onset=plateau_onset(values)
    )


def trend_summary(report: NcReport) -> TrendSummary:
    """
    Depth trends of every metric at the final checkpoint

    Returns:
        TrendSummary with ratio last/first layer, layer deltas and plateau onset
    """
    final = report.final_checkpoint
    return TrendSummary(
        epoch=final.epoch,
        layer_count=len(final.layers),
        metrics={metric: _metric_trend(metric, final.metric_series(metric)) for metric in METRIC_NAMES}
    )
