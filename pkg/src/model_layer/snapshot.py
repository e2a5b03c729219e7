"""
Model Snapshot
Versioned little-endian binary model file ("NCMD")

Layout:
    magic      4 bytes  b"NCMD"
    version    u32
    layers     u32      number of affine layers L (hidden + output)
    dims       u32 * (L + 1)
    activation u32      0 relu, 1 tanh, 2 leakyrelu
    slope      f64      leaky slope (stored for every activation kind)
    params     f64 ...  per layer: weight (row-major), then bias
"""

from pathlib import Path
import struct

import numpy as np
from loguru import logger

from .mlp import ActivationKind, MlpModel
from ..utils import ensure_dir


MAGIC = b"NCMD"
VERSION = 1
ACTIVATION_TAGS = {
    ActivationKind.RELU: 0,
    ActivationKind.TANH: 1,
    ActivationKind.LEAKY_RELU: 2,
}


class SnapshotFormatError(ValueError):
    """Raised for malformed or truncated model files"""


def save_model(model: MlpModel, filepath: Path) -> Path:
    """
    Write a model snapshot

    Args:
        model: Model to persist
        filepath: Destination file

    Returns:
        Path written
    """
    filepath = Path(filepath)
    ensure_dir(filepath.parent)

    dims = [model.input_dim, *[w.shape[0] for w in model.weights]]
    header = MAGIC + struct.pack("<II", VERSION, len(model.weights))
    header += struct.pack(f"<{len(dims)}I", *dims)
    header += struct.pack("<Id", ACTIVATION_TAGS[model.activation], model.leaky_slope)

    with open(filepath, 'wb') as f:
        f.write(header)
        for param in model.parameters():
            f.write(np.ascontiguousarray(param, dtype='<f8').tobytes())

    logger.info(f"Model snapshot saved: {filepath}")
    return filepath


def load_model(filepath: Path) -> MlpModel:
    """
    Read a model snapshot

    Raises:
        SnapshotFormatError: Bad magic, unsupported version or truncated payload
    """
    filepath = Path(filepath)
    data = filepath.read_bytes()

    def take(offset: int, fmt: str) -> tuple:
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise SnapshotFormatError(f"{filepath}: truncated header")
        return struct.unpack_from(fmt, data, offset)

    if data[:4] != MAGIC:
        raise SnapshotFormatError(f"{filepath}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, layers = take(4, "<II")
    if version != VERSION:
        raise SnapshotFormatError(f"{filepath}: unsupported snapshot version {version}")
    if layers < 1:
        raise SnapshotFormatError(f"{filepath}: snapshot declares {layers} layers")

    offset = 12
    dims = take(offset, f"<{layers + 1}I")
    offset += 4 * (layers + 1)
    tag, slope = take(offset, "<Id")
    offset += struct.calcsize("<Id")

    by_tag = {v: k for k, v in ACTIVATION_TAGS.items()}
    if tag not in by_tag:
        raise SnapshotFormatError(f"{filepath}: unknown activation tag {tag}")

    expected = sum(d_out * d_in + d_out for d_in, d_out in zip(dims[:-1], dims[1:]))
    if len(data) - offset != 8 * expected:
        raise SnapshotFormatError(
            f"{filepath}: expected {8 * expected} parameter bytes, found {len(data) - offset}"
        )
    values = np.frombuffer(data, dtype='<f8', count=expected, offset=offset)

    weights, biases = [], []
    cursor = 0
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        weights.append(values[cursor:cursor + d_out * d_in].reshape(d_out, d_in).astype(np.float64))
        cursor += d_out * d_in
        biases.append(values[cursor:cursor + d_out].astype(np.float64))
        cursor += d_out

    logger.info(f"Model snapshot loaded: {filepath} (dims={list(dims)})")
    return MlpModel(weights, biases, by_tag[tag], slope)
