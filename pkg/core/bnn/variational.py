# core/bnn/variational.py
"""
Mean-field variational Bayesian network.

Every hidden weight and bias has an independent Gaussian posterior
q(w) = N(mu, sigma^2) with sigma = softplus(rho) and prior N(0, 1). A
deterministic dense head maps the last hidden activation to the raw mean and
raw SD of a Gaussian over the (standardized) EoL target.

The objective is the minibatch ELBO, mean Gaussian NLL plus
kl_weight * KL(q || prior). The default weight charges the full KL / n_train
once per minibatch against the summed batch NLL; 'dataset' gives the exact
per-example ELBO and 'none' drops the KL term. Gradients are derived by hand
with the noise held fixed, so a finite-difference check can use the very same
draw.
"""
import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from core.bnn.network import TrainableNetwork

logger = logging.getLogger(__name__)

SOFTPLUS_LINEAR_ABOVE = 30.0
SD_FLOOR = 1e-6
INIT_MU_SD = 0.1
HEAD_UNITS = 2
LOG_2PI = math.log(2.0 * math.pi)
ESTIMATORS = ('reparameterization', 'flipout')
KL_WEIGHT_MODES = ('minibatch', 'dataset', 'none')
ACTIVATIONS = ('relu', 'identity')


def _scalar_or_array(value: np.ndarray):
    return float(value) if value.ndim == 0 else value


def softplus(x):
    """ln(1 + e^x), returning x itself above 30 where the two agree to double precision."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > SOFTPLUS_LINEAR_ABOVE, x, np.log1p(np.exp(np.minimum(x, SOFTPLUS_LINEAR_ABOVE))))
    return _scalar_or_array(out)


def softplus_grad(x):
    return _scalar_or_array(expit(np.asarray(x, dtype=np.float64)))


def inverse_softplus(y):
    """rho such that softplus(rho) = y, for y > 0."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("inverse_softplus is defined for positive values only")
    out = np.where(y > SOFTPLUS_LINEAR_ABOVE, y, np.log(np.expm1(np.minimum(y, SOFTPLUS_LINEAR_ABOVE))))
    return _scalar_or_array(out)


def kl_gaussian(mu, sigma):
    """Elementwise KL(N(mu, sigma^2) || N(0, 1)) = (mu^2 + sigma^2 - 1)/2 - ln sigma."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ValueError("kl_gaussian requires sigma > 0")
    return _scalar_or_array(0.5 * (mu ** 2 + sigma ** 2 - 1.0) - np.log(sigma))


def gaussian_nll(y, mean, sd):
    """Elementwise negative log density of y under N(mean, sd^2)."""
    y, mean, sd = (np.asarray(v, dtype=np.float64) for v in (y, mean, sd))
    if np.any(sd <= 0):
        raise ValueError("gaussian_nll requires sd > 0")
    return _scalar_or_array(0.5 * LOG_2PI + np.log(sd) + (y - mean) ** 2 / (2.0 * sd ** 2))


def head_distribution(out: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Splits head output into (mean, sd) with sd = softplus(raw_sd) + SD_FLOOR."""
    return out[:, 0], softplus(out[:, 1]) + SD_FLOOR


def gaussian_head_loss(out: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean NLL over the batch and its gradient with respect to the raw head output."""
    mean, sd = head_distribution(out)
    batch = out.shape[0]
    residual = mean - y
    loss = float(np.mean(gaussian_nll(y, mean, sd)))
    d_mean = residual / sd ** 2 / batch
    d_sd = (1.0 / sd - residual ** 2 / sd ** 3) / batch
    return loss, np.column_stack([d_mean, d_sd * expit(out[:, 1])])


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return np.maximum(z, 0.0) if activation == 'relu' else z


def _activation_grad(z: np.ndarray, activation: str) -> np.ndarray:
    return (z > 0).astype(np.float64) if activation == 'relu' else np.ones_like(z)


@dataclass
class GaussianVariational:
    """Factorized Gaussian posterior over one parameter array."""
    mu: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        self.mu = np.array(self.mu, dtype=np.float64)
        self.rho = np.array(self.rho, dtype=np.float64)
        if self.mu.shape != self.rho.shape:
            raise ValueError(f"mu shape {self.mu.shape} differs from rho shape {self.rho.shape}")

    @classmethod
    def initialize(cls, shape, rng: np.random.Generator, init_rho: float) -> 'GaussianVariational':
        return cls(mu=rng.normal(0.0, INIT_MU_SD, size=shape), rho=np.full(shape, float(init_rho)))

    @property
    def sigma(self) -> np.ndarray:
        return np.asarray(softplus(self.rho))

    def sample(self, eps: np.ndarray) -> np.ndarray:
        return self.mu + self.sigma * eps

    def kl(self) -> float:
        return float(np.sum(kl_gaussian(self.mu, self.sigma)))


@dataclass
class VariationalDenseLayer:
    weight: GaussianVariational      # (out_dim, in_dim)
    bias: GaussianVariational        # (out_dim,)
    activation: str = 'relu'

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation '{self.activation}'")
        if self.weight.mu.ndim != 2 or self.bias.mu.shape != (self.weight.mu.shape[0],):
            raise ValueError("layer weight must be (out, in) and bias (out,)")

    @property
    def in_dim(self) -> int:
        return self.weight.mu.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.mu.shape[0]


@dataclass
class DenseLayer:
    weight: np.ndarray   # (out_dim, in_dim)
    bias: np.ndarray     # (out_dim,)

    def __post_init__(self):
        self.weight = np.array(self.weight, dtype=np.float64)
        self.bias = np.array(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError("dense weight must be (out, in) and bias (out,)")


@dataclass
class LayerNoise:
    """Standard-normal draws for one layer; sign vectors are present only for Flipout."""
    weight: np.ndarray
    bias: np.ndarray
    sign_in: Optional[np.ndarray] = None
    sign_out: Optional[np.ndarray] = None


@dataclass
class LayerCache:
    inputs: np.ndarray
    pre_activation: np.ndarray
    weight_delta: Optional[np.ndarray]


@dataclass
class ForwardCache:
    layers: List[LayerCache]
    last_hidden: np.ndarray

    @property
    def pre_activations(self) -> List[np.ndarray]:
        return [layer.pre_activation for layer in self.layers]


@dataclass
class BnnModel(TrainableNetwork):
    hidden: List[VariationalDenseLayer]
    head: DenseLayer
    target_mean: float = 0.0
    target_scale: float = 1.0
    kl_weight_mode: str = 'minibatch'
    estimator: str = 'reparameterization'
    train_rho: bool = True

    def __post_init__(self):
        if self.head.weight.shape[0] != HEAD_UNITS:
            raise ValueError(f"the output head must have exactly {HEAD_UNITS} units")
        expected = self.input_dim
        for layer in self.hidden:
            if layer.in_dim != expected:
                raise ValueError("hidden layer dimensions are inconsistent")
            expected = layer.out_dim
        if self.head.weight.shape[1] != expected:
            raise ValueError("head input dimension does not match the last hidden layer")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator '{self.estimator}'")
        if self.kl_weight_mode not in KL_WEIGHT_MODES:
            raise ValueError(f"unknown KL weight mode '{self.kl_weight_mode}'")
        if not self.target_scale > 0:
            raise ValueError("target_scale must be positive")

    @property
    def input_dim(self) -> int:
        return self.hidden[0].in_dim if self.hidden else self.head.weight.shape[1]

    @property
    def hidden_dims(self) -> List[int]:
        return [layer.out_dim for layer in self.hidden]

    def parameters(self) -> Dict[str, np.ndarray]:
        params = {}
        for i, layer in enumerate(self.hidden):
            params[f'hidden.{i}.weight.mu'] = layer.weight.mu
            params[f'hidden.{i}.weight.rho'] = layer.weight.rho
            params[f'hidden.{i}.bias.mu'] = layer.bias.mu
            params[f'hidden.{i}.bias.rho'] = layer.bias.rho
        params['head.weight'] = self.head.weight
        params['head.bias'] = self.head.bias
        return params

    def kl(self) -> float:
        return sum(layer.weight.kl() + layer.bias.kl() for layer in self.hidden)

    def kl_weight(self, n_train: int, batch_size: int = 1) -> float:
        """
        Weight of the KL term against the batch-mean NLL. 'dataset' is the exact
        per-example ELBO, KL / n_train. 'minibatch' charges KL / n_train once per
        batch against the summed batch NLL, i.e. KL / (n_train * batch_size) here.
        """
        if self.kl_weight_mode == 'dataset':
            return 1.0 / n_train
        if self.kl_weight_mode == 'minibatch':
            return 1.0 / (n_train * batch_size)
        return 0.0

    def draw_noise(
        self, rng: np.random.Generator, batch_size: int = 1, estimator: Optional[str] = None
    ) -> List[LayerNoise]:
        """One weight draw per layer; Flipout adds per-example random sign vectors."""
        flipout = (estimator or self.estimator) == 'flipout'
        noise = []
        for layer in self.hidden:
            entry = LayerNoise(
                weight=rng.standard_normal(layer.weight.mu.shape),
                bias=rng.standard_normal(layer.bias.mu.shape),
            )
            if flipout:
                entry.sign_in = rng.integers(0, 2, size=(batch_size, layer.in_dim)) * 2.0 - 1.0
                entry.sign_out = rng.integers(0, 2, size=(batch_size, layer.out_dim)) * 2.0 - 1.0
            noise.append(entry)
        return noise

    def loss_and_gradients(self, X, y, rng, n_train):
        noise = self.draw_noise(rng, len(X))
        loss, grads = _elbo_and_gradients(self, X, y, noise, n_train)
        if not self.train_rho:
            grads = {name: grad for name, grad in grads.items() if not name.endswith('.rho')}
        return loss, grads

    def mean_prediction(self, X) -> np.ndarray:
        out, _ = forward(self, X)
        return self.unstandardize(out[:, 0])

    def snapshot(self) -> 'BnnModel':
        return copy.deepcopy(self)


def initialize_bnn(
    input_dim: int,
    hidden_dims: Sequence[int],
    rng: np.random.Generator,
    init_rho: float = -3.0,
    target_mean: float = 0.0,
    target_scale: float = 1.0,
    **options,
) -> BnnModel:
    """mu ~ N(0, 0.1^2) and rho = init_rho everywhere; the head is drawn like the means."""
    hidden = []
    previous = input_dim
    for width in hidden_dims:
        hidden.append(VariationalDenseLayer(
            weight=GaussianVariational.initialize((width, previous), rng, init_rho),
            bias=GaussianVariational.initialize((width,), rng, init_rho),
        ))
        previous = width
    head = DenseLayer(
        weight=rng.normal(0.0, INIT_MU_SD, size=(HEAD_UNITS, previous)),
        bias=rng.normal(0.0, INIT_MU_SD, size=HEAD_UNITS),
    )
    return BnnModel(hidden=hidden, head=head, target_mean=target_mean, target_scale=target_scale, **options)


def forward(
    model: BnnModel, X, noise: Optional[Sequence[LayerNoise]] = None
) -> Tuple[np.ndarray, ForwardCache]:
    """Raw head output (batch, 2) in standardized units; weights = mu when `noise` is None."""
    a = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if a.shape[1] != model.input_dim:
        raise ValueError(f"expected {model.input_dim} input features, got {a.shape[1]}")
    caches = []
    for i, layer in enumerate(model.hidden):
        layer_noise = noise[i] if noise is not None else None
        if layer_noise is None:
            delta = None
            z = a @ layer.weight.mu.T + layer.bias.mu
        else:
            delta = layer.weight.sigma * layer_noise.weight
            bias = layer.bias.sample(layer_noise.bias)
            if layer_noise.sign_in is None:
                z = a @ (layer.weight.mu + delta).T + bias
            else:
                if layer_noise.sign_in.shape[0] != a.shape[0]:
                    raise ValueError("Flipout signs were drawn for a different batch size")
                z = a @ layer.weight.mu.T + ((a * layer_noise.sign_in) @ delta.T) * layer_noise.sign_out + bias
        caches.append(LayerCache(inputs=a, pre_activation=z, weight_delta=delta))
        a = _activate(z, layer.activation)
    out = a @ model.head.weight.T + model.head.bias
    return out, ForwardCache(layers=caches, last_hidden=a)


def sample_forward(model: BnnModel, x, rng: np.random.Generator):
    """
    One reparameterized weight draw w = mu + sigma * eps, then the predictive
    Gaussian (mean, sd) in cycles. Scalars for a single vector, arrays for a matrix.
    """
    single = np.asarray(x).ndim == 1
    out, _ = forward(model, x, model.draw_noise(rng, estimator='reparameterization'))
    mean, sd = head_distribution(out)
    mean, sd = model.unstandardize(mean), model.target_scale * sd
    return (float(mean[0]), float(sd[0])) if single else (mean, sd)


def _resolve_noise(model: BnnModel, X, rng, noise) -> List[LayerNoise]:
    if noise is not None:
        return list(noise)
    if rng is None:
        raise ValueError("either rng or noise must be given")
    return model.draw_noise(rng, len(np.atleast_2d(X)))


def _elbo_and_gradients(
    model: BnnModel, X, y, noise: Sequence[LayerNoise], n_train: int
) -> Tuple[float, Dict[str, np.ndarray]]:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y_std = model.standardize_targets(np.atleast_1d(y))
    if X.shape[0] == 0:
        raise ValueError("the batch is empty")
    if y_std.shape != (X.shape[0],):
        raise ValueError("X and y lengths differ")
    kl_weight = model.kl_weight(n_train, X.shape[0])
    out, cache = forward(model, X, noise)
    nll, d_out = gaussian_head_loss(out, y_std)
    loss = nll + kl_weight * model.kl() if kl_weight else nll

    grads: Dict[str, np.ndarray] = {
        'head.weight': d_out.T @ cache.last_hidden,
        'head.bias': d_out.sum(axis=0),
    }
    d_a = d_out @ model.head.weight
    for i in reversed(range(len(model.hidden))):
        layer, layer_cache, layer_noise = model.hidden[i], cache.layers[i], noise[i]
        d_z = d_a * _activation_grad(layer_cache.pre_activation, layer.activation)
        d_bias = d_z.sum(axis=0)
        d_weight_mu = d_z.T @ layer_cache.inputs
        if layer_noise.sign_in is None:
            d_delta = d_weight_mu
            d_a = d_z @ (layer.weight.mu + layer_cache.weight_delta)
        else:
            d_z_signed = d_z * layer_noise.sign_out
            d_delta = d_z_signed.T @ (layer_cache.inputs * layer_noise.sign_in)
            d_a = d_z @ layer.weight.mu + (d_z_signed @ layer_cache.weight_delta) * layer_noise.sign_in

        w_sigma, b_sigma = layer.weight.sigma, layer.bias.sigma
        grads[f'hidden.{i}.weight.mu'] = d_weight_mu + kl_weight * layer.weight.mu
        grads[f'hidden.{i}.weight.rho'] = (
            d_delta * layer_noise.weight + kl_weight * (w_sigma - 1.0 / w_sigma)
        ) * expit(layer.weight.rho)
        grads[f'hidden.{i}.bias.mu'] = d_bias + kl_weight * layer.bias.mu
        grads[f'hidden.{i}.bias.rho'] = (
            d_bias * layer_noise.bias + kl_weight * (b_sigma - 1.0 / b_sigma)
        ) * expit(layer.bias.rho)

    return float(loss), {name: grads[name] for name in model.parameters()}


def elbo_loss(
    model: BnnModel,
    X,
    y,
    rng: Optional[np.random.Generator] = None,
    n_train: Optional[int] = None,
    noise: Optional[Sequence[LayerNoise]] = None,
) -> float:
    """Mean Gaussian NLL of the batch under one shared weight draw plus model.kl_weight(n_train, batch) x KL."""
    n_train = n_train or len(np.atleast_2d(X))
    resolved = _resolve_noise(model, X, rng, noise)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("the batch is empty")
    out, _ = forward(model, X, resolved)
    mean, sd = head_distribution(out)
    nll = float(np.mean(gaussian_nll(model.standardize_targets(np.atleast_1d(y)), mean, sd)))
    kl_weight = model.kl_weight(n_train, X.shape[0])
    return nll + kl_weight * model.kl() if kl_weight else nll


def gradients(
    model: BnnModel,
    X,
    y,
    rng: Optional[np.random.Generator] = None,
    n_train: Optional[int] = None,
    noise: Optional[Sequence[LayerNoise]] = None,
) -> Dict[str, np.ndarray]:
    """Exact gradients of elbo_loss for every (mu, rho, head) parameter, noise held fixed."""
    n_train = n_train or len(np.atleast_2d(X))
    return _elbo_and_gradients(model, X, y, _resolve_noise(model, X, rng, noise), n_train)[1]
