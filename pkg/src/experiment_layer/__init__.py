"""
Experiment Layer Package
Training with scheduled NC-analysis checkpoints, reports and report persistence
"""

from .report import (
    METRIC_NAMES,
    CheckpointRecord,
    MetricTrend,
    NcReport,
    TrendSummary,
    detect_tpt,
    plateau_onset,
    trend_summary
)
from .report_writer import ReportWriter
from .runner import ExperimentRunner

__all__ = [
    'METRIC_NAMES',
    'CheckpointRecord',
    'MetricTrend',
    'NcReport',
    'TrendSummary',
    'detect_tpt',
    'plateau_onset',
    'trend_summary',
    'ReportWriter',
    'ExperimentRunner'
]
