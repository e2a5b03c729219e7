"""
Data Ingestion Manager
Builds the training set for an experiment: load or synthesize, rebalance, normalize
"""

from typing import Any, Dict, Tuple

from loguru import logger

from .dataset import LabeledDataset
from .data_pipeline import normalize, rebalance
from .idx_loader import load_idx
from .synthetic import synthesize
from ..config import DataConfig


class DataIngestionManager:
    """Coordinates dataset preparation for one experiment"""

    def __init__(self, data_config: DataConfig, seed: int = 0):
        self.data_config = data_config
        self.seed = seed

    def load_raw(self) -> LabeledDataset:
        """Read the configured source without any preprocessing"""
        cfg = self.data_config

        if cfg.source == "idx":
            logger.info(f"Loading IDX dataset from {cfg.images} / {cfg.labels}")
            return load_idx(cfg.images, cfg.labels, cfg.class_count)

        spec = cfg.synthetic
        if spec.seed is None:
            spec = spec.model_copy(update={'seed': self.seed})
        return synthesize(spec)

    def ingest(self) -> Tuple[LabeledDataset, Dict[str, Any]]:
        """
        Produce the analysis-ready training set

        Returns:
            (dataset, metadata describing every preprocessing step)
        """
        cfg = self.data_config
        dataset = self.load_raw()
        metadata: Dict[str, Any] = {
            'source': cfg.source,
            'raw_size': dataset.size,
            'raw_class_counts': dataset.class_counts.tolist()
        }

        if cfg.per_class_n is not None:
            dataset = rebalance(dataset, cfg.per_class_n, self.seed)
            metadata['per_class_n'] = cfg.per_class_n

        if cfg.normalize:
            dataset, stats = normalize(dataset, cfg.normalization)
            metadata['normalization'] = cfg.normalization
            degenerate = stats.std < 1e-12
            metadata['degenerate_dims'] = int(degenerate.sum())
            metadata['normalization_stats'] = stats.to_dict()

        metadata.update({
            'size': dataset.size,
            'input_dim': dataset.input_dim,
            'class_count': dataset.class_count,
            'class_counts': dataset.class_counts.tolist()
        })

        logger.info(f"Dataset ready: {dataset}")
        return dataset, metadata
