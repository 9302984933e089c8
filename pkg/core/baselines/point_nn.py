# core/baselines/point_nn.py
"""
Deterministic network baseline: the same layer stack as the BNN with point
weights, trained by the same multi-stage loop. The default loss is squared
error with a single output; "gaussian_nll" keeps the 2-unit Gaussian head,
which is what a BNN with vanishing posterior SDs and no KL term reduces to.
"""
import copy
import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Sequence, Tuple

import numpy as np

from core.bnn.network import TrainableNetwork
from core.bnn.training import validate_training_set, fit_network, seed_streams, target_scaling
from core.bnn.variational import INIT_MU_SD, DenseLayer, gaussian_head_loss
from schemas.model_schemas import TrainConfig, TrainingHistory

logger = logging.getLogger(__name__)

PointLoss = Literal['mse', 'gaussian_nll']
HEAD_UNITS = {'mse': 1, 'gaussian_nll': 2}


@dataclass
class PointNnModel(TrainableNetwork):
    layers: List[DenseLayer]
    head: DenseLayer
    target_mean: float = 0.0
    target_scale: float = 1.0
    loss: str = 'mse'

    def __post_init__(self):
        if self.loss not in HEAD_UNITS:
            raise ValueError(f"unknown loss '{self.loss}'")
        if self.head.weight.shape[0] != HEAD_UNITS[self.loss]:
            raise ValueError(f"a '{self.loss}' head needs {HEAD_UNITS[self.loss]} output units")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1] if self.layers else self.head.weight.shape[1]

    def parameters(self) -> Dict[str, np.ndarray]:
        params = {}
        for i, layer in enumerate(self.layers):
            params[f'hidden.{i}.weight'] = layer.weight
            params[f'hidden.{i}.bias'] = layer.bias
        params['head.weight'] = self.head.weight
        params['head.bias'] = self.head.bias
        return params

    def forward(self, X) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
        """Raw head output plus the per-layer inputs and pre-activations."""
        a = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if a.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} input features, got {a.shape[1]}")
        inputs, pre_activations = [], []
        for layer in self.layers:
            z = a @ layer.weight.T + layer.bias
            inputs.append(a)
            pre_activations.append(z)
            a = np.maximum(z, 0.0)
        inputs.append(a)
        return a @ self.head.weight.T + self.head.bias, inputs, pre_activations

    def objective(self, X, y) -> Tuple[float, Dict[str, np.ndarray]]:
        """Loss in standardized target units and its exact gradients."""
        y_std = self.standardize_targets(np.atleast_1d(y))
        out, inputs, pre_activations = self.forward(X)
        if out.shape[0] == 0:
            raise ValueError("the batch is empty")
        if self.loss == 'mse':
            residual = out[:, 0] - y_std
            loss = float(np.mean(residual ** 2))
            d_out = (2.0 * residual / out.shape[0])[:, None]
        else:
            loss, d_out = gaussian_head_loss(out, y_std)

        grads = {'head.weight': d_out.T @ inputs[-1], 'head.bias': d_out.sum(axis=0)}
        d_a = d_out @ self.head.weight
        for i in reversed(range(len(self.layers))):
            d_z = d_a * (pre_activations[i] > 0)
            grads[f'hidden.{i}.weight'] = d_z.T @ inputs[i]
            grads[f'hidden.{i}.bias'] = d_z.sum(axis=0)
            d_a = d_z @ self.layers[i].weight
        return loss, {name: grads[name] for name in self.parameters()}

    def loss_and_gradients(self, X, y, rng, n_train):
        return self.objective(X, y)

    def mean_prediction(self, X) -> np.ndarray:
        out, _, _ = self.forward(X)
        return self.unstandardize(out[:, 0])

    def snapshot(self) -> 'PointNnModel':
        return copy.deepcopy(self)


def initialize_point_nn(
    input_dim: int, hidden_dims: Sequence[int], rng: np.random.Generator, loss: PointLoss = 'mse',
    target_mean: float = 0.0, target_scale: float = 1.0,
) -> PointNnModel:
    """Draws weights in the same order and scale as the BNN's posterior means."""
    layers = []
    previous = input_dim
    for width in hidden_dims:
        layers.append(DenseLayer(
            weight=rng.normal(0.0, INIT_MU_SD, size=(width, previous)),
            bias=rng.normal(0.0, INIT_MU_SD, size=width),
        ))
        previous = width
    units = HEAD_UNITS[loss]
    head = DenseLayer(
        weight=rng.normal(0.0, INIT_MU_SD, size=(units, previous)),
        bias=rng.normal(0.0, INIT_MU_SD, size=units),
    )
    return PointNnModel(layers=layers, head=head, target_mean=target_mean, target_scale=target_scale, loss=loss)


def train_point_nn(
    X, y, config: TrainConfig = TrainConfig(), loss: PointLoss = 'mse'
) -> Tuple[PointNnModel, TrainingHistory]:
    """Trains the deterministic baseline with the BNN's schedule and seed streams."""
    X, y = validate_training_set(X, y)
    init_rng, shuffle_rng, noise_rng = seed_streams(config.seed)
    target_mean, target_scale = target_scaling(y)
    model = initialize_point_nn(X.shape[1], config.hidden_dims, init_rng, loss, target_mean, target_scale)
    logger.info(f"Training point NN ({loss}) on {X.shape[0]} cells (seed {config.seed}).")
    return fit_network(model, X, y, config, shuffle_rng, noise_rng)
