"""
Data Pipeline
Per-class rebalancing and normalization of labeled datasets
"""

from typing import Literal, Tuple

import numpy as np
from numpy.typing import NDArray
from loguru import logger

from .dataset import LabeledDataset


DEGENERATE_STD = 1e-12


class NormalizationStats:
    """Statistics used to standardize a dataset (per dimension, or scalar for global mode)"""

    def __init__(self, mode: str, mean: NDArray[np.float64], std: NDArray[np.float64]):
        self.mode = mode
        self.mean = mean
        self.std = std

    def apply(self, inputs) -> NDArray[np.float64]:
        """Center, then divide wherever the std is not degenerate"""
        inputs = np.asarray(inputs, dtype=np.float64) - self.mean
        scale = np.where(self.std < DEGENERATE_STD, 1.0, self.std)
        return inputs / scale

    def to_dict(self) -> dict:
        return {
            'mode': self.mode,
            'mean': np.atleast_1d(self.mean).tolist(),
            'std': np.atleast_1d(self.std).tolist()
        }


def rebalance(dataset: LabeledDataset, per_class_n: int, seed: int) -> LabeledDataset:
    """
    Subsample every class to exactly per_class_n samples

    Sampling is uniform without replacement per class. Output is class-major,
    original index order within a class.

    Args:
        dataset: Source dataset
        per_class_n: Samples kept per class
        seed: RNG seed

    Returns:
        Balanced dataset
    """
    if per_class_n < 1:
        raise ValueError(f"per_class_n must be >= 1, got {per_class_n}")

    counts = dataset.class_counts
    short = np.flatnonzero(counts < per_class_n)
    if short.size:
        c = int(short[0])
        raise ValueError(f"Class {c} has {int(counts[c])} samples, fewer than per_class_n={per_class_n}")

    rng = np.random.default_rng(seed)
    chosen = []
    for c in range(dataset.class_count):
        members = np.flatnonzero(dataset.labels == c)
        chosen.append(np.sort(rng.choice(members, size=per_class_n, replace=False)))

    balanced = dataset.subset(np.concatenate(chosen))
    logger.info(f"Rebalanced dataset to {per_class_n} samples x {dataset.class_count} classes")
    return balanced


def normalize(
    dataset: LabeledDataset,
    mode: Literal["per_dimension", "global"] = "per_dimension"
) -> Tuple[LabeledDataset, NormalizationStats]:
    """
    Standardize inputs to mean 0 / std 1 over the dataset

    Uses the population std. Dimensions (or, in global mode, the whole
    dataset) with std below 1e-12 are only centered.

    Args:
        dataset: Dataset with N >= 2
        mode: "per_dimension" or "global"

    Returns:
        (normalized dataset, statistics)
    """
    if dataset.size < 2:
        raise ValueError(f"Normalization needs at least 2 samples, got {dataset.size}")

    if mode == "per_dimension":
        mean = dataset.inputs.mean(axis=0)
        std = dataset.inputs.std(axis=0)
    elif mode == "global":
        mean = np.asarray(dataset.inputs.mean())
        std = np.asarray(dataset.inputs.std())
    else:
        raise ValueError(f"Unknown normalization mode: {mode}")

    stats = NormalizationStats(mode, mean, std)
    degenerate = int(np.count_nonzero(np.atleast_1d(std) < DEGENERATE_STD))
    if degenerate:
        logger.info(f"{degenerate} degenerate dimension(s) centered but not scaled")

    return LabeledDataset(stats.apply(dataset.inputs), dataset.labels, dataset.class_count), stats
