"""
Data Layer Package
Handles dataset ingestion, rebalancing, normalization and synthesis
"""

from .dataset import LabeledDataset
from .idx_loader import IdxFormatError, load_idx, read_idx
from .data_pipeline import NormalizationStats, normalize, rebalance
from .synthetic import simplex_vertices, synthesize
from .data_ingestion import DataIngestionManager

__all__ = [
    'LabeledDataset',
    'IdxFormatError',
    'load_idx',
    'read_idx',
    'NormalizationStats',
    'normalize',
    'rebalance',
    'simplex_vertices',
    'synthesize',
    'DataIngestionManager'
]
