"""
Class Statistics
Two-pass streaming accumulation of global mean, class means and the pooled
within-class / between-class scatter matrices of layer activations
"""

from typing import Optional

import numpy as np
from numpy.typing import NDArray
from loguru import logger

from .matrix_ops import Matrix


class EmptyClassError(ValueError):
    """Raised when a class has no samples at finalization"""


class ClassStatistics:
    """Finalized per-layer statistics: mu_G, mu_c, Sigma_W, Sigma_B"""

    def __init__(
        self,
        class_counts: NDArray[np.int64],
        global_mean: NDArray[np.float64],
        class_means: Matrix,
        sigma_w: Matrix,
        sigma_b: Matrix
    ):
        self.class_counts = class_counts
        self.global_mean = global_mean
        self.class_means = class_means
        self.sigma_w = sigma_w
        self.sigma_b = sigma_b

    @property
    def class_count(self) -> int:
        return self.class_means.shape[0]

    @property
    def dim(self) -> int:
        return self.class_means.shape[1]

    @property
    def centered_means(self) -> Matrix:
        """Class means minus the global mean, one row per class"""
        return self.class_means - self.global_mean

    def __repr__(self) -> str:
        return f"<ClassStatistics(C={self.class_count}, p={self.dim}, N={int(self.class_counts.sum())})>"


class StreamingClassAccumulator:
    """
    Two-pass accumulator over (activations, labels) batches.

    Pass one collects per-class counts and sums. After ``begin_scatter_pass``
    the class means are frozen and the same batches are streamed again to
    collect the pooled within-class scatter around them.
    """

    MEANS_PASS = "means"
    SCATTER_PASS = "scatter"

    def __init__(self, class_count: int, dim: int):
        if class_count < 1:
            raise ValueError(f"class_count must be >= 1, got {class_count}")
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")

        self.class_count = class_count
        self.dim = dim
        self.phase = self.MEANS_PASS
        self.counts = np.zeros(class_count, dtype=np.int64)
        self.sums = np.zeros((class_count, dim), dtype=np.float64)
        self.class_means: Optional[Matrix] = None
        self.scatter_counts = np.zeros(class_count, dtype=np.int64)
        self.scatter = np.zeros((dim, dim), dtype=np.float64)

    def _check_batch(self, batch, labels) -> tuple[Matrix, NDArray[np.int64]]:
        batch = np.asarray(batch, dtype=np.float64)
        labels = np.asarray(labels)
        if batch.ndim != 2 or batch.shape[1] != self.dim:
            raise ValueError(f"Batch shape {batch.shape} does not match accumulator dim {self.dim}")
        if labels.shape != (batch.shape[0],):
            raise ValueError(f"Got {labels.shape} labels for {batch.shape[0]} samples")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            bad = labels[(labels < 0) | (labels >= self.class_count)][0]
            raise ValueError(f"Label {bad} out of range [0, {self.class_count})")
        return batch, labels.astype(np.int64)

    def accumulate(self, batch, labels) -> "StreamingClassAccumulator":
        """
        Feed one batch into the current pass

        Args:
            batch: Activations, shape (n, dim)
            labels: Class index per row

        Returns:
            self, for chaining
        """
        batch, labels = self._check_batch(batch, labels)

        if self.phase == self.MEANS_PASS:
            self.counts += np.bincount(labels, minlength=self.class_count)
            np.add.at(self.sums, labels, batch)
        else:
            centered = batch - self.class_means[labels]
            self.scatter += centered.T @ centered
            self.scatter_counts += np.bincount(labels, minlength=self.class_count)

        return self

    def _require_all_classes(self) -> None:
        empty = np.flatnonzero(self.counts == 0)
        if empty.size:
            raise EmptyClassError(f"Class {int(empty[0])} has no samples")

    def begin_scatter_pass(self) -> "StreamingClassAccumulator":
        """Freeze class means and switch to the scatter pass"""
        if self.phase != self.MEANS_PASS:
            raise RuntimeError("Scatter pass already started")
        self._require_all_classes()
        self.class_means = self.sums / self.counts[:, None]
        self.phase = self.SCATTER_PASS
        return self

    def merge(self, other: "StreamingClassAccumulator") -> "StreamingClassAccumulator":
        """
        Combine two partial accumulators into a new one

        Both must be in the same pass. Scatter-pass accumulators must come from
        the same frozen means pass (identical counts and class means); only
        their scatter contributions are added.
        """
        if (self.class_count, self.dim) != (other.class_count, other.dim):
            raise ValueError(
                f"Cannot merge accumulators of shape ({self.class_count}, {self.dim}) "
                f"and ({other.class_count}, {other.dim})"
            )
        if self.phase != other.phase:
            raise ValueError(f"Cannot merge a {self.phase}-pass and a {other.phase}-pass accumulator")

        merged = StreamingClassAccumulator(self.class_count, self.dim)
        merged.phase = self.phase
        if self.phase == self.MEANS_PASS:
            merged.counts = self.counts + other.counts
            merged.sums = self.sums + other.sums
            return merged

        if not (np.array_equal(self.class_means, other.class_means) and np.array_equal(self.counts, other.counts)):
            raise ValueError("Cannot merge scatter passes built on different class means")
        merged.counts = self.counts.copy()
        merged.sums = self.sums.copy()
        merged.class_means = self.class_means.copy()
        merged.scatter = self.scatter + other.scatter
        merged.scatter_counts = self.scatter_counts + other.scatter_counts
        return merged

    def finalize(self) -> ClassStatistics:
        """
        Produce the class statistics

        Sigma_W is the pooled within-class scatter averaged over all samples,
        Sigma_B the average over classes of centered class-mean outer products.
        Both are symmetrized.

        Raises:
            EmptyClassError: If a class never received a sample
            RuntimeError: If the scatter pass is missing or incomplete
        """
        self._require_all_classes()
        if self.phase != self.SCATTER_PASS:
            raise RuntimeError("finalize() requires the scatter pass; call begin_scatter_pass() and re-stream")
        if not np.array_equal(self.scatter_counts, self.counts):
            raise RuntimeError(
                f"Scatter pass saw {int(self.scatter_counts.sum())} samples, means pass saw {int(self.counts.sum())}"
            )

        total = int(self.counts.sum())
        global_mean = self.sums.sum(axis=0) / total

        sigma_w = self.scatter / total
        sigma_w = (sigma_w + sigma_w.T) / 2

        centered = self.class_means - global_mean
        sigma_b = centered.T @ centered / self.class_count
        sigma_b = (sigma_b + sigma_b.T) / 2

        logger.debug(f"Finalized class statistics: C={self.class_count}, p={self.dim}, N={total}")

        return ClassStatistics(
            class_counts=self.counts.copy(),
            global_mean=global_mean,
            class_means=self.class_means.copy(),
            sigma_w=sigma_w,
            sigma_b=sigma_b
        )


def compute_class_statistics(
    activations,
    labels,
    class_count: int,
    batch_rows: int = 4096
) -> ClassStatistics:
    """
    Run both accumulator passes over an in-memory activation matrix

    Args:
        activations: Shape (N, p)
        labels: Class index per row
        class_count: Number of classes C
        batch_rows: Rows streamed per accumulate call

    Returns:
        Finalized ClassStatistics
    """
    activations = np.asarray(activations, dtype=np.float64)
    labels = np.asarray(labels)
    if activations.ndim != 2:
        raise ValueError(f"Expected (N, p) activations, got shape {activations.shape}")

    accumulator = StreamingClassAccumulator(class_count, activations.shape[1])
    starts = range(0, activations.shape[0], batch_rows)

    for start in starts:
        accumulator.accumulate(activations[start:start + batch_rows], labels[start:start + batch_rows])
    accumulator.begin_scatter_pass()
    for start in starts:
        accumulator.accumulate(activations[start:start + batch_rows], labels[start:start + batch_rows])

    return accumulator.finalize()
