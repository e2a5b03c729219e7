"""
Optimizer
SGD with momentum and coupled weight decay, plus the one-cycle learning-rate schedule
"""

import math
from typing import List

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, model_validator

from .mlp import MlpModel, ModelGradients


class SgdState:
    """Momentum buffers, one per parameter, shaped like the parameters"""

    def __init__(self, model: MlpModel, momentum: float = 0.9, weight_decay: float = 1e-5):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.buffers: List[NDArray[np.float64]] = [np.zeros_like(p) for p in model.parameters()]
        self.learning_rate = 0.0
        self.steps = 0


class OneCycleSchedule(BaseModel):
    """
    Cosine warm-up from max_lr/start_div to max_lr, then cosine decay to max_lr/final_div
    """
    max_lr: float = Field(gt=0.0)
    total_steps: int = Field(ge=0)
    warmup_fraction: float = Field(0.3, gt=0.0, lt=1.0)
    start_div: float = Field(25.0, gt=0.0)
    final_div: float = Field(1e4, gt=0.0)

    @property
    def warmup_steps(self) -> float:
        return self.warmup_fraction * self.total_steps

    @model_validator(mode="after")
    def _check_divisors(self) -> "OneCycleSchedule":
        if self.start_div < 1.0 or self.final_div < 1.0:
            raise ValueError("start_div and final_div must be >= 1 so that max_lr is the peak")
        return self


def _cosine(start: float, end: float, fraction: float) -> float:
    return end + (start - end) * (1.0 + math.cos(math.pi * fraction)) / 2.0


def lr_at(schedule: OneCycleSchedule, step: int) -> float:
    """
    Learning rate at a given optimizer step

    Args:
        schedule: One-cycle schedule
        step: 0 <= step <= total_steps

    Returns:
        Learning rate
    """
    if not 0 <= step <= schedule.total_steps:
        raise ValueError(f"Step {step} outside schedule range [0, {schedule.total_steps}]")

    initial = schedule.max_lr / schedule.start_div
    final = schedule.max_lr / schedule.final_div
    warmup = schedule.warmup_steps

    if schedule.total_steps == 0:
        return initial
    if step <= warmup:
        return _cosine(initial, schedule.max_lr, step / warmup)
    return _cosine(schedule.max_lr, final, (step - warmup) / (schedule.total_steps - warmup))


def sgd_step(
    model: MlpModel,
    grads: ModelGradients,
    state: SgdState,
    lr: float
) -> tuple[MlpModel, SgdState]:
    """
    One in-place momentum step

    buffer <- momentum * buffer + (grad + weight_decay * param)
    param  <- param - lr * buffer

    Returns:
        The updated (model, state)
    """
    params = model.parameters()
    grad_list = grads.parameters()
    if len(params) != len(grad_list) or len(params) != len(state.buffers):
        raise ValueError("Gradient / buffer count does not match model parameters")

    for param, grad, buffer in zip(params, grad_list, state.buffers):
        if grad.shape != param.shape:
            raise ValueError(f"Gradient shape {grad.shape} does not match parameter shape {param.shape}")
        buffer *= state.momentum
        buffer += grad + state.weight_decay * param
        param -= lr * buffer

    state.learning_rate = lr
    state.steps += 1
    return model, state
