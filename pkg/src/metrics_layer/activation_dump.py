"""
Activation Dump
Versioned little-endian binary file ("NCAD") carrying one layer's activations,
labels and network predictions for analysis outside the training process

Layout:
    magic        4 bytes  b"NCAD"
    version      u32
    N            u64
    p            u64
    C            u32
    dtype tag    u32      1 = float32, 2 = float64
    labels       u32 * N
    predictions  u32 * N
    activations  N * p values, row-major
"""

from pathlib import Path
from typing import List
import struct

import numpy as np
from numpy.typing import NDArray
from loguru import logger

from ..linalg_layer import Matrix
from ..utils import ensure_dir


MAGIC = b"NCAD"
VERSION = 1
HEADER = struct.Struct("<4sIQQII")
DTYPE_TAGS = {1: np.dtype('<f4'), 2: np.dtype('<f8')}


class DumpFormatError(ValueError):
    """Raised for malformed or truncated activation dumps"""


class ActivationDump:
    """In-memory contents of one NCAD file"""

    def __init__(
        self,
        activations: Matrix,
        labels: NDArray[np.int64],
        predictions: NDArray[np.int64],
        class_count: int
    ):
        self.activations = activations
        self.labels = labels
        self.predictions = predictions
        self.class_count = class_count

    def __repr__(self) -> str:
        n, p = self.activations.shape
        return f"<ActivationDump(N={n}, p={p}, C={self.class_count})>"


def write_dump(
    filepath: Path,
    activations,
    labels,
    predictions,
    class_count: int,
    dtype: str = "f64"
) -> Path:
    """
    Write one layer to an NCAD file

    Args:
        filepath: Destination
        activations: Shape (N, p)
        labels: True class per row
        predictions: Network prediction per row
        class_count: C
        dtype: "f32" or "f64" storage for the activations

    Returns:
        Path written
    """
    activations = np.asarray(activations)
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    if activations.ndim != 2:
        raise ValueError(f"Expected (N, p) activations, got shape {activations.shape}")
    n, p = activations.shape
    if labels.shape != (n,) or predictions.shape != (n,):
        raise ValueError(f"Labels {labels.shape} / predictions {predictions.shape} do not match N={n}")

    tag = {"f32": 1, "f64": 2}.get(dtype)
    if tag is None:
        raise ValueError(f"Unknown dump dtype {dtype!r}; use 'f32' or 'f64'")

    filepath = Path(filepath)
    ensure_dir(filepath.parent)
    with open(filepath, 'wb') as f:
        f.write(HEADER.pack(MAGIC, VERSION, n, p, class_count, tag))
        f.write(labels.astype('<u4').tobytes())
        f.write(predictions.astype('<u4').tobytes())
        f.write(np.ascontiguousarray(activations, dtype=DTYPE_TAGS[tag]).tobytes())

    logger.info(f"Activation dump written: {filepath} (N={n}, p={p}, C={class_count}, {dtype})")
    return filepath


def read_dump(filepath: Path) -> ActivationDump:
    """
    Parse an NCAD file; activations are returned as float64

    Raises:
        DumpFormatError: Bad magic, unsupported version/dtype, truncation or out-of-range labels
    """
    filepath = Path(filepath)
    data = filepath.read_bytes()

    if len(data) < HEADER.size:
        raise DumpFormatError(f"{filepath}: truncated header ({len(data)} bytes)")
    magic, version, n, p, class_count, tag = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DumpFormatError(f"{filepath}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise DumpFormatError(f"{filepath}: unsupported dump version {version}")
    if tag not in DTYPE_TAGS:
        raise DumpFormatError(f"{filepath}: unknown dtype tag {tag}")

    dtype = DTYPE_TAGS[tag]
    expected = HEADER.size + 8 * n + dtype.itemsize * n * p
    if len(data) != expected:
        raise DumpFormatError(f"{filepath}: expected {expected} bytes, found {len(data)}")

    offset = HEADER.size
    labels = np.frombuffer(data, dtype='<u4', count=n, offset=offset).astype(np.int64)
    offset += 4 * n
    predictions = np.frombuffer(data, dtype='<u4', count=n, offset=offset).astype(np.int64)
    offset += 4 * n
    activations = np.frombuffer(data, dtype=dtype, count=n * p, offset=offset).astype(np.float64).reshape(n, p)

    for name, values in (("label", labels), ("prediction", predictions)):
        if values.size and values.max() >= class_count:
            raise DumpFormatError(f"{filepath}: {name} {int(values.max())} out of range for C={class_count}")

    return ActivationDump(activations, labels, predictions, class_count)


def dump_model_layers(
    output_dir: Path,
    post_activations: List[Matrix],
    labels,
    predictions,
    class_count: int,
    dtype: str = "f64"
) -> List[Path]:
    """
    Write one NCAD file per hidden layer (layer_1.ncad, layer_2.ncad, ...)

    Returns:
        Paths in layer order
    """
    output_dir = ensure_dir(output_dir)
    return [
        write_dump(output_dir / f"layer_{j}.ncad", acts, labels, predictions, class_count, dtype)
        for j, acts in enumerate(post_activations, start=1)
    ]
