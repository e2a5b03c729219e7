"""
Shared fixtures: small datasets, IDX/NCAD writers and fast experiment configs
"""

from pathlib import Path
import struct

import numpy as np
import pytest
from loguru import logger

from src.config import ExperimentConfig
from src.data_layer import LabeledDataset, simplex_vertices
from src.linalg_layer import ClassStatistics


@pytest.fixture(autouse=True)
def quiet_logger():
    """Keep loguru at WARNING during tests"""
    logger.remove()
    logger.add(lambda message: None, level="WARNING")
    yield
    logger.remove()


def write_idx(path: Path, array: np.ndarray, dtype_code: int = 0x08) -> Path:
    """Write an unsigned-byte IDX file (gzip when the suffix is .gz)"""
    import gzip

    array = np.asarray(array, dtype=np.uint8)
    payload = struct.pack(">HBB", 0, dtype_code, array.ndim)
    payload += struct.pack(f">{array.ndim}I", *array.shape)
    payload += array.tobytes()

    path = Path(path)
    opener = gzip.open if path.suffix == '.gz' else open
    with opener(path, 'wb') as f:
        f.write(payload)
    return path


def collapsed_activations(class_count: int, dim: int, per_class: int, radius: float = 3.0):
    """Every sample sits exactly on its class mean; the means form a simplex ETF"""
    means = np.zeros((class_count, dim))
    means[:, :class_count - 1] = simplex_vertices(class_count, radius)
    labels = np.repeat(np.arange(class_count), per_class)
    return means[labels].copy(), labels


def gaussian_activations(rng: np.random.Generator, class_count: int, dim: int, per_class: int = 40,
                         spread: float = 3.0):
    """Well-separated random class means plus unit noise"""
    means = spread * rng.standard_normal((class_count, dim))
    labels = np.repeat(np.arange(class_count), per_class)
    activations = means[labels] + rng.standard_normal((labels.size, dim))
    return activations, labels


def stats_from_means(class_means, global_mean=None) -> ClassStatistics:
    """Hand-built statistics for geometry checks on the class means only"""
    class_means = np.asarray(class_means, dtype=np.float64)
    c, p = class_means.shape
    if global_mean is None:
        global_mean = np.zeros(p)
    centered = class_means - global_mean
    return ClassStatistics(
        class_counts=np.ones(c, dtype=np.int64),
        global_mean=np.asarray(global_mean, dtype=np.float64),
        class_means=class_means,
        sigma_w=np.zeros((p, p)),
        sigma_b=centered.T @ centered / c
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def idx_writer():
    return write_idx


@pytest.fixture
def small_dataset(rng):
    """3 classes x 10 samples in 5 dimensions, class-major"""
    labels = np.repeat(np.arange(3), 10)
    inputs = rng.standard_normal((30, 5)) + 4.0 * np.eye(3, 5)[labels]
    return LabeledDataset(inputs, labels, 3)


def fast_config(**sections) -> ExperimentConfig:
    """Well-separated tiny mixture that reaches zero train error in a few dozen epochs"""
    data = {
        'model': {'depth': 3, 'width': 32, 'activation': 'relu'},
        'data': {
            'source': 'synthetic',
            'synthetic': {'class_count': 3, 'input_dim': 8, 'per_class_n': 30, 'separation': 6.0, 'std': 0.5}
        },
        'optimizer': {'batch_size': 16},
        'schedule': {'max_lr': 0.1},
        'training': {'epochs': 100, 'show_progress': False},
        'analysis': {'threads': 1}
    }
    for section, values in sections.items():
        data.setdefault(section, {}).update(values)
    return ExperimentConfig.model_validate(data)


@pytest.fixture
def tiny_config():
    return fast_config(training={'epochs': 12, 'checkpoint_epochs': [0, 4, 12]})
