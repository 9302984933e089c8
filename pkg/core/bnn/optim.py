# core/bnn/optim.py
"""
Adam updates and the plateau-driven multi-stage learning-rate schedule.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict

import numpy as np

logger = logging.getLogger(__name__)

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState, lr: float
):
    """
    One bias-corrected Adam update, applied in place. Only parameters that
    have a gradient move; frozen ones keep their values and moments.
    """
    unknown = set(grads) - set(params)
    if unknown:
        raise ValueError(f"gradients for unknown parameters: {sorted(unknown)}")
    state.step += 1
    correction1 = 1.0 - BETA1 ** state.step
    correction2 = 1.0 - BETA2 ** state.step
    for name, grad in grads.items():
        param = params[name]
        if grad.shape != param.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match parameter '{name}' {param.shape}")
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1.0 - BETA1) * grad if m is None else BETA1 * m + (1.0 - BETA1) * grad
        v = (1.0 - BETA2) * grad ** 2 if v is None else BETA2 * v + (1.0 - BETA2) * grad ** 2
        state.m[name], state.v[name] = m, v
        param -= lr * (m / correction1) / (np.sqrt(v / correction2) + EPSILON)
    return params, state


class ScheduleAction(Enum):
    IMPROVED = 'improved'
    CONTINUE = 'continue'
    REDUCED = 'reduced'
    STOP = 'stop'


class PlateauSchedule:
    """
    Tracks the best training MAE. After `halving_patience` epochs without a
    strict improvement the rate halves (never below `floor`) and a new stage
    begins; within a stage, `stop_patience` unimproved epochs end training.
    Once the rate sits at the floor no further stages start.
    """

    def __init__(self, initial_lr: float, halving_patience: int, floor: float, stop_patience: int):
        self.lr = initial_lr
        self.halving_patience = halving_patience
        self.floor = floor
        self.stop_patience = stop_patience
        self.best = float('inf')
        self.since_improvement = 0
        self.stage = 0

    def observe(self, mae: float) -> ScheduleAction:
        if mae < self.best:
            self.best = mae
            self.since_improvement = 0
            return ScheduleAction.IMPROVED
        self.since_improvement += 1
        if self.since_improvement >= self.halving_patience and self.lr > self.floor:
            self.lr = max(self.lr / 2.0, self.floor)
            self.since_improvement = 0
            self.stage += 1
            logger.info(f"Training stage {self.stage}: learning rate reduced to {self.lr:g}.")
            return ScheduleAction.REDUCED
        if self.since_improvement >= self.stop_patience:
            return ScheduleAction.STOP
        return ScheduleAction.CONTINUE
