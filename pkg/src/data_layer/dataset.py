"""
Labeled Dataset
Flattened input vectors with integer class labels
"""

from typing import Optional

import numpy as np
from numpy.typing import NDArray


class LabeledDataset:
    """Inputs (N, input_dim) as float64 and labels in [0, class_count)"""

    def __init__(self, inputs, labels, class_count: Optional[int] = None):
        inputs = np.asarray(inputs, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)

        if inputs.ndim != 2:
            raise ValueError(f"Inputs must be 2-D (N, input_dim), got shape {inputs.shape}")
        if labels.shape != (inputs.shape[0],):
            raise ValueError(f"Got {labels.shape[0] if labels.ndim else 0} labels for {inputs.shape[0]} inputs")
        if labels.size and labels.min() < 0:
            raise ValueError(f"Negative label {labels.min()}")

        if class_count is None:
            class_count = int(labels.max()) + 1 if labels.size else 0
        if labels.size and labels.max() >= class_count:
            raise ValueError(f"Label {labels.max()} out of range for {class_count} classes")

        self.inputs = inputs
        self.labels = labels
        self.class_count = class_count

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def class_counts(self) -> NDArray[np.int64]:
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, indices) -> "LabeledDataset":
        """Rows at the given indices, in that order"""
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.inputs[indices], self.labels[indices], self.class_count)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"<LabeledDataset(N={self.size}, input_dim={self.input_dim}, C={self.class_count})>"
