"""
Model Layer Package
Minimal MLP classifier, SGD optimizer, one-cycle schedule and model snapshots
"""

from .mlp import (
    ActivationKind,
    ArchitectureSpec,
    ForwardTrace,
    MlpModel,
    ModelGradients,
    backward,
    forward,
    forward_sharded,
    init_model,
    mse_loss,
    train_error
)
from .optimizer import OneCycleSchedule, SgdState, lr_at, sgd_step
from .snapshot import SnapshotFormatError, load_model, save_model

__all__ = [
    'ActivationKind',
    'ArchitectureSpec',
    'ForwardTrace',
    'MlpModel',
    'ModelGradients',
    'backward',
    'forward',
    'forward_sharded',
    'init_model',
    'mse_loss',
    'train_error',
    'OneCycleSchedule',
    'SgdState',
    'lr_at',
    'sgd_step',
    'SnapshotFormatError',
    'load_model',
    'save_model'
]
