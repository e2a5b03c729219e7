"""
Synthetic Data
Gaussian mixtures whose class means sit on the vertices of a scaled simplex
"""

import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from loguru import logger

from .dataset import LabeledDataset
from ..config import SyntheticSpec


def simplex_vertices(class_count: int, radius: float = 1.0) -> NDArray[np.float64]:
    """
    C equinorm, equiangular points in R^(C-1) with pairwise cosine -1/(C-1)

    Rows of the Helmert basis are orthonormal and orthogonal to the all-ones
    vector, so its columns are the centered one-hot vectors in C-1 coordinates.

    Args:
        class_count: C >= 2
        radius: Norm of every vertex

    Returns:
        Array of shape (C, C-1)
    """
    if class_count < 2:
        raise ValueError(f"A simplex needs at least 2 vertices, got {class_count}")
    vertices = scipy.linalg.helmert(class_count, full=False).T
    vertices /= np.linalg.norm(vertices, axis=1, keepdims=True)
    return radius * vertices


def synthesize(spec: SyntheticSpec) -> LabeledDataset:
    """
    Draw a class-major labeled Gaussian mixture

    Class means are simplex vertices of radius spec.separation placed in the
    first C-1 input dimensions; noise is isotropic with std spec.std.

    Args:
        spec: Mixture description; seed None means 0

    Returns:
        LabeledDataset with spec.per_class_n samples per class
    """
    c = spec.class_count
    if spec.input_dim < c - 1:
        raise ValueError(f"input_dim {spec.input_dim} is smaller than C-1 = {c - 1}")

    means = np.zeros((c, spec.input_dim))
    means[:, :c - 1] = simplex_vertices(c, spec.separation)

    rng = np.random.default_rng(0 if spec.seed is None else spec.seed)
    labels = np.repeat(np.arange(c), spec.per_class_n)
    inputs = means[labels] + spec.std * rng.standard_normal((labels.size, spec.input_dim))

    logger.info(
        f"Synthesized {labels.size} samples: C={c}, dim={spec.input_dim}, "
        f"separation={spec.separation}, std={spec.std}"
    )
    return LabeledDataset(inputs, labels, c)
