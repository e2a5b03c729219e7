"""
MLP Classifier
Fully-connected classifier with post-activation capture, MSE loss and manual backprop
"""

from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, Dict, List, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field
from loguru import logger

from ..data_layer.dataset import LabeledDataset
from ..linalg_layer import Matrix


class ActivationKind(str, Enum):
    """Hidden-layer nonlinearity"""
    RELU = "relu"
    TANH = "tanh"
    LEAKY_RELU = "leakyrelu"


ActivationPair = Tuple[Callable[[Matrix, float], Matrix], Callable[[Matrix, Matrix, float], Matrix]]

# (function, derivative given pre-activation z and output a)
ACTIVATIONS: Dict[ActivationKind, ActivationPair] = {
    ActivationKind.RELU: (
        lambda z, slope: np.maximum(z, 0.0),
        lambda z, a, slope: (z > 0).astype(np.float64)
    ),
    ActivationKind.TANH: (
        lambda z, slope: np.tanh(z),
        lambda z, a, slope: 1.0 - a * a
    ),
    ActivationKind.LEAKY_RELU: (
        lambda z, slope: np.where(z > 0, z, slope * z),
        lambda z, a, slope: np.where(z > 0, 1.0, slope)
    ),
}


class ArchitectureSpec(BaseModel):
    """Layer dimensions and nonlinearity of an MLP"""
    input_dim: int
    hidden_dims: List[int]
    class_count: int
    activation: ActivationKind = ActivationKind.RELU
    leaky_slope: float = Field(0.01, gt=0.0)

    @classmethod
    def uniform(
        cls,
        input_dim: int,
        class_count: int,
        width: int = 4096,
        depth: int = 6,
        activation: ActivationKind = ActivationKind.RELU,
        leaky_slope: float = 0.01
    ) -> "ArchitectureSpec":
        """Equal-width hidden layers; the defaults give the MLP6 preset"""
        return cls(
            input_dim=input_dim,
            hidden_dims=[width] * depth,
            class_count=class_count,
            activation=activation,
            leaky_slope=leaky_slope
        )


class MlpModel:
    """Weights are (d_out, d_in); the last layer is linear and produces the logits"""

    def __init__(
        self,
        weights: List[Matrix],
        biases: List[NDArray[np.float64]],
        activation: ActivationKind,
        leaky_slope: float = 0.01
    ):
        if len(weights) != len(biases) or not weights:
            raise ValueError(f"Got {len(weights)} weight matrices and {len(biases)} bias vectors")
        for k in range(1, len(weights)):
            if weights[k].shape[1] != weights[k - 1].shape[0]:
                raise ValueError(
                    f"Layer {k} expects input dim {weights[k].shape[1]}, "
                    f"previous layer outputs {weights[k - 1].shape[0]}"
                )
        for k, (w, b) in enumerate(zip(weights, biases)):
            if b.shape != (w.shape[0],):
                raise ValueError(f"Layer {k} bias shape {b.shape} does not match weight rows {w.shape[0]}")

        self.weights = weights
        self.biases = biases
        self.activation = ActivationKind(activation)
        self.leaky_slope = leaky_slope

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def class_count(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def hidden_dims(self) -> List[int]:
        return [w.shape[0] for w in self.weights[:-1]]

    @property
    def depth(self) -> int:
        """Number of hidden (captured) layers"""
        return len(self.weights) - 1

    def parameters(self) -> List[NDArray[np.float64]]:
        """Parameters in layer order, weight then bias"""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def copy(self) -> "MlpModel":
        return MlpModel(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
            self.leaky_slope
        )

    def __repr__(self) -> str:
        dims = [self.input_dim, *self.hidden_dims, self.class_count]
        return f"<MlpModel(dims={dims}, activation='{self.activation.value}')>"


class ForwardTrace:
    """Post-activations of every hidden layer plus final logits"""

    def __init__(self, post_activations: List[Matrix], logits: Matrix):
        self.post_activations = post_activations
        self.logits = logits

    @property
    def predictions(self) -> NDArray[np.int64]:
        """Argmax of logits; ties go to the lowest class index"""
        return np.argmax(self.logits, axis=1)


class ModelGradients:
    """Gradients matching MlpModel.weights / MlpModel.biases"""

    def __init__(self, weights: List[Matrix], biases: List[NDArray[np.float64]]):
        self.weights = weights
        self.biases = biases

    def parameters(self) -> List[NDArray[np.float64]]:
        grads = []
        for w, b in zip(self.weights, self.biases):
            grads.extend([w, b])
        return grads

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(g * g) for g in self.parameters())))


def init_model(spec: ArchitectureSpec, seed: int) -> MlpModel:
    """
    Create a model with uniform(-1/sqrt(d_in), 1/sqrt(d_in)) weights and zero biases

    Args:
        spec: Architecture
        seed: RNG seed; same seed gives bit-identical parameters

    Returns:
        Initialized MlpModel
    """
    dims = [spec.input_dim, *spec.hidden_dims, spec.class_count]
    if any(d < 1 for d in dims):
        raise ValueError(f"All layer dimensions must be >= 1, got {dims}")
    if spec.class_count < 2:
        raise ValueError(f"Need at least 2 classes, got {spec.class_count}")

    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(d_in)
        weights.append(rng.uniform(-bound, bound, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))

    logger.debug(f"Initialized MLP {dims} ({spec.activation.value}) with seed {seed}")
    return MlpModel(weights, biases, spec.activation, spec.leaky_slope)


def _check_input(model: MlpModel, batch) -> Matrix:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ValueError(f"Batch shape {batch.shape} does not match model input dim {model.input_dim}")
    return batch


def _forward_layers(model: MlpModel, batch: Matrix) -> Tuple[List[Matrix], List[Matrix]]:
    """Pre-activations and outputs of every layer (outputs[-1] are the logits)"""
    fn, _ = ACTIVATIONS[model.activation]
    pre, out = [], []
    a = batch
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        a = z if k == last else fn(z, model.leaky_slope)
        pre.append(z)
        out.append(a)
    return pre, out


def forward(model: MlpModel, batch) -> ForwardTrace:
    """
    Forward pass capturing each hidden layer after its nonlinearity

    Args:
        model: MLP
        batch: Inputs, shape (n, input_dim)

    Returns:
        ForwardTrace with one capture per hidden layer
    """
    batch = _check_input(model, batch)
    _, out = _forward_layers(model, batch)
    return ForwardTrace(post_activations=out[:-1], logits=out[-1])


def forward_sharded(model: MlpModel, batch, threads: int = 1) -> ForwardTrace:
    """
    Forward pass over contiguous row shards on a thread pool

    Shard results are concatenated in input order.
    """
    batch = _check_input(model, batch)
    threads = max(1, min(threads, batch.shape[0]))
    if threads == 1:
        return forward(model, batch)

    shards = np.array_split(batch, threads, axis=0)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        traces = list(pool.map(lambda shard: forward(model, shard), shards))

    return ForwardTrace(
        post_activations=[
            np.concatenate([t.post_activations[j] for t in traces], axis=0)
            for j in range(model.depth)
        ],
        logits=np.concatenate([t.logits for t in traces], axis=0)
    )


def one_hot(labels, class_count: int) -> Matrix:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= class_count):
        raise ValueError(f"Labels must lie in [0, {class_count})")
    return np.eye(class_count)[labels]


def mse_loss(logits, labels) -> float:
    """Mean over batch and class coordinates of (logit - one-hot target)^2"""
    logits = np.asarray(logits, dtype=np.float64)
    targets = one_hot(labels, logits.shape[1])
    return float(np.mean((logits - targets) ** 2))


def backward(model: MlpModel, batch, labels) -> ModelGradients:
    """
    Exact gradients of mse_loss with respect to every weight and bias

    Args:
        model: MLP
        batch: Inputs, shape (n, input_dim)
        labels: Class index per row

    Returns:
        ModelGradients aligned with the model's parameters
    """
    batch = _check_input(model, batch)
    pre, out = _forward_layers(model, batch)
    _, derivative = ACTIVATIONS[model.activation]

    n, c = out[-1].shape
    delta = 2.0 * (out[-1] - one_hot(labels, c)) / (n * c)

    grad_w: List[Matrix] = [None] * len(model.weights)
    grad_b: List[NDArray[np.float64]] = [None] * len(model.weights)
    for k in range(len(model.weights) - 1, -1, -1):
        a_prev = batch if k == 0 else out[k - 1]
        grad_w[k] = delta.T @ a_prev
        grad_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ model.weights[k]) * derivative(pre[k - 1], out[k - 1], model.leaky_slope)

    return ModelGradients(grad_w, grad_b)


def train_error(model: MlpModel, dataset: LabeledDataset) -> float:
    """
    Fraction of samples whose argmax logit differs from the label

    Args:
        model: MLP
        dataset: Non-empty labeled dataset

    Returns:
        Error rate in [0, 1]
    """
    if dataset.size == 0:
        raise ValueError("Cannot compute train error on an empty dataset")
    predictions = forward(model, dataset.inputs).predictions
    return float(np.mean(predictions != dataset.labels))
