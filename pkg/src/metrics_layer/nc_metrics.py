"""
Neural Collapse Metrics
Variance collapse, equal norms, maximal angles and nearest-class-center agreement
computed on one hidden layer's post-activations
"""

from typing import List, Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field
from scipy.spatial.distance import cdist
from loguru import logger

from ..linalg_layer import ClassStatistics, Matrix, compute_class_statistics, pseudoinverse


NC1_CLAMP = 1e-10
DEFAULT_COORD_CAP = 2048


class DegenerateClassMeansError(ValueError):
    """Raised when centered class means are zero and angles/norm ratios are undefined"""


class LayerMetrics(BaseModel):
    """Collapse metrics of hidden layer `layer` (1 = shallowest)"""
    layer: int
    nc1: float = Field(ge=0.0)
    nc2_norms: float = Field(ge=0.0)
    nc2_angles: float = Field(ge=0.0)
    nc4: float = Field(ge=0.0, le=1.0)


class CoordinateSubsample(BaseModel):
    """Sorted random coordinate selection applied before the statistics"""
    source_dim: int
    target_dim: int
    indices: List[int]
    seed: int

    @property
    def is_identity(self) -> bool:
        return self.target_dim == self.source_dim


def nc1(stats: ClassStatistics, rel_tol: Optional[float] = None) -> float:
    """
    Intra-class variance collapse: Tr(pinv(Sigma_B) Sigma_W) / C

    The pseudoinverse keeps at most C-1 singular values, the rank bound of
    Sigma_B, on top of the relative tolerance.

    Args:
        stats: Finalized class statistics
        rel_tol: Pseudoinverse relative cutoff (default p * eps)

    Returns:
        Non-negative value; tiny negatives above -1e-10 are clamped to 0
    """
    inverse_b = pseudoinverse(
        stats.sigma_b,
        rel_tol=rel_tol,
        max_rank=stats.class_count - 1,
        assume_symmetric=True
    )
    # trace(A @ B) for symmetric B without forming the product
    value = float(np.sum(inverse_b * stats.sigma_w)) / stats.class_count

    if value < 0.0:
        if value < -NC1_CLAMP:
            logger.warning(f"NC1 evaluated to {value:.3e}; clamping to 0")
        value = 0.0
    return value


def _centered_norms(stats: ClassStatistics) -> NDArray[np.float64]:
    return np.linalg.norm(stats.centered_means, axis=1)


def nc2_equal_norms(stats: ClassStatistics) -> float:
    """
    Coefficient of variation of the centered class-mean norms

    Uses the population std over the C classes.

    Raises:
        DegenerateClassMeansError: If every centered class mean is zero
    """
    if stats.class_count < 2:
        raise ValueError(f"Equal-norms metric needs C >= 2, got {stats.class_count}")
    norms = _centered_norms(stats)
    average = norms.mean()
    if average == 0.0:
        raise DegenerateClassMeansError("degenerate class means: all centered class-mean norms are zero")
    return float(norms.std() / average)


def nc2_max_angles(stats: ClassStatistics) -> float:
    """
    Average over class pairs c < c' of |cos(mu_c - mu_G, mu_c' - mu_G) + 1/(C-1)|

    Raises:
        DegenerateClassMeansError: If a centered class mean is zero
    """
    c = stats.class_count
    if c < 2:
        raise ValueError(f"Maximal-angles metric needs C >= 2, got {c}")
    norms = _centered_norms(stats)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateClassMeansError(f"Centered mean of class {int(zero[0])} is zero; angle undefined")

    unit = stats.centered_means / norms[:, None]
    cosines = np.clip(unit @ unit.T, -1.0, 1.0)
    upper = np.triu_indices(c, k=1)
    return float(np.mean(np.abs(cosines[upper] + 1.0 / (c - 1))))


def ncc_predictions(layer_activations: Matrix, class_means: Matrix) -> NDArray[np.int64]:
    """Nearest class mean per row (Euclidean); ties go to the lowest class index"""
    distances = cdist(layer_activations, class_means, metric='sqeuclidean')
    return np.argmin(distances, axis=1)


def nc4(layer_activations, class_means, network_predictions) -> float:
    """
    Mismatch rate between the network and the nearest-class-center rule

    Args:
        layer_activations: Shape (N, p)
        class_means: Shape (C, p)
        network_predictions: Network class per row

    Returns:
        Fraction in [0, 1] of rows where the two disagree
    """
    layer_activations = np.asarray(layer_activations, dtype=np.float64)
    class_means = np.asarray(class_means, dtype=np.float64)
    network_predictions = np.asarray(network_predictions)

    if layer_activations.ndim != 2 or class_means.ndim != 2 or layer_activations.shape[1] != class_means.shape[1]:
        raise ValueError(
            f"Activations {layer_activations.shape} and class means {class_means.shape} dimensions differ"
        )
    if network_predictions.shape != (layer_activations.shape[0],):
        raise ValueError(
            f"Got {network_predictions.shape} predictions for {layer_activations.shape[0]} activation rows"
        )

    agreement = ncc_predictions(layer_activations, class_means) == network_predictions
    return float(1.0 - np.mean(agreement))


def subsample_coordinates(dim: int, cap: int, seed: int) -> CoordinateSubsample:
    """
    Choose at most `cap` coordinates uniformly without replacement

    Args:
        dim: Layer width p_j
        cap: Maximum retained coordinates (>= 1)
        seed: RNG seed

    Returns:
        Identity selection when dim <= cap, else a sorted random subset
    """
    if cap < 1:
        raise ValueError(f"Coordinate cap must be >= 1, got {cap}")

    if dim <= cap:
        indices = np.arange(dim)
    else:
        rng = np.random.default_rng(seed)
        indices = np.sort(rng.choice(dim, size=cap, replace=False))

    return CoordinateSubsample(
        source_dim=dim,
        target_dim=len(indices),
        indices=indices.tolist(),
        seed=seed
    )


def analyze_layer(
    activations,
    labels,
    predictions,
    cap: int = DEFAULT_COORD_CAP,
    seed: int = 0,
    rel_tol: Optional[float] = None,
    layer: int = 1,
    class_count: Optional[int] = None
) -> LayerMetrics:
    """
    All four collapse metrics of one layer

    Args:
        activations: Post-activations, shape (N, p)
        labels: True class per row
        predictions: Network prediction per row
        cap: Coordinate subsample cap
        seed: Subsample seed
        rel_tol: Pseudoinverse relative cutoff
        layer: Layer index recorded in the result
        class_count: C; inferred as max(labels) + 1 when None

    Returns:
        LayerMetrics
    """
    activations = np.asarray(activations, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)

    if activations.ndim != 2:
        raise ValueError(f"Expected (N, p) activations, got shape {activations.shape}")
    if labels.shape != (activations.shape[0],) or predictions.shape != labels.shape:
        raise ValueError(
            f"Inconsistent shapes: activations {activations.shape}, labels {labels.shape}, "
            f"predictions {predictions.shape}"
        )
    if class_count is None:
        class_count = int(labels.max()) + 1 if labels.size else 0
    if class_count < 2:
        raise ValueError(f"Layer analysis needs at least 2 classes, got {class_count}")

    selection = subsample_coordinates(activations.shape[1], cap, seed)
    if not selection.is_identity:
        activations = activations[:, selection.indices]

    stats = compute_class_statistics(activations, labels, class_count)
    metrics = LayerMetrics(
        layer=layer,
        nc1=nc1(stats, rel_tol),
        nc2_norms=nc2_equal_norms(stats),
        nc2_angles=nc2_max_angles(stats),
        nc4=nc4(activations, stats.class_means, predictions)
    )

    logger.debug(
        f"Layer {layer} (p={selection.target_dim}/{selection.source_dim}): nc1={metrics.nc1:.4g} "
        f"nc2_norms={metrics.nc2_norms:.4g} nc2_angles={metrics.nc2_angles:.4g} nc4={metrics.nc4:.4g}"
    )
    return metrics
