"""
IDX Loader
Reads MNIST-style IDX image/label files (optionally gzip-compressed)

Header (big-endian):
    magic  u32   0x0000TTRR  TT = element type (0x08 unsigned byte), RR = rank
    dims   u32 * rank
    data   rank-dimensional payload, row-major
"""

from pathlib import Path
from typing import Optional
import gzip
import struct

import numpy as np
from numpy.typing import NDArray
from loguru import logger

from .dataset import LabeledDataset


UNSIGNED_BYTE = 0x08
IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Raised for malformed, unsupported or truncated IDX files"""


def _read_bytes(path: Path) -> bytes:
    if not path.exists():
        raise FileNotFoundError(f"IDX file not found: {path}")
    opener = gzip.open if path.suffix == '.gz' else open
    with opener(path, 'rb') as f:
        return f.read()


def read_idx(path: Path) -> NDArray[np.uint8]:
    """
    Parse one IDX file of unsigned bytes

    Args:
        path: File path (.gz accepted)

    Returns:
        Array with the dimensions declared in the header
    """
    path = Path(path)
    data = _read_bytes(path)

    if len(data) < 4:
        raise IdxFormatError(f"{path}: file too short for an IDX header")
    zero, dtype, rank = struct.unpack(">HBB", data[:4])
    if zero != 0:
        raise IdxFormatError(f"{path}: bad magic 0x{data[:4].hex()}")
    if dtype != UNSIGNED_BYTE:
        raise IdxFormatError(f"{path}: unsupported element type 0x{dtype:02x} (only unsigned byte)")
    if rank < 1:
        raise IdxFormatError(f"{path}: rank must be >= 1, got {rank}")

    header_size = 4 + 4 * rank
    if len(data) < header_size:
        raise IdxFormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{rank}I", data[4:header_size])

    expected = int(np.prod(dims))
    payload = len(data) - header_size
    if payload < expected:
        raise IdxFormatError(f"{path}: truncated payload, expected {expected} bytes, found {payload}")
    if payload > expected:
        logger.warning(f"{path}: {payload - expected} trailing bytes ignored")

    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=header_size).reshape(dims)


def load_idx(
    images_path: Path,
    labels_path: Path,
    class_count: Optional[int] = None
) -> LabeledDataset:
    """
    Load an image/label IDX pair into a flattened dataset

    Pixels are flattened row-major and scaled to [0, 1].

    Args:
        images_path: Image file (magic 0x00000803 or any rank >= 2 unsigned byte)
        labels_path: Label file (magic 0x00000801)
        class_count: Number of classes; inferred from the labels when None

    Returns:
        LabeledDataset aligned by index
    """
    images = read_idx(images_path)
    labels = read_idx(labels_path)

    if images.ndim < 2:
        raise IdxFormatError(f"{images_path}: image file must have rank >= 2, got {images.ndim}")
    if labels.ndim != 1:
        raise IdxFormatError(f"{labels_path}: label file must have rank 1, got {labels.ndim}")
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"Image count {images.shape[0]} ({images_path}) does not match "
            f"label count {labels.shape[0]} ({labels_path})"
        )

    inputs = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    dataset = LabeledDataset(inputs, labels.astype(np.int64), class_count)

    logger.info(f"Loaded IDX dataset: {dataset.size} samples, dim {dataset.input_dim}, {dataset.class_count} classes")
    return dataset
