# schemas/model_schemas.py
"""
Defines the Pydantic data models (Data Contracts) for training, prediction
and persisted models.
"""
import math
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from schemas.feature_schemas import Standardizer

Z_95 = 1.96
MODEL_FORMAT = "bnn-model-v1"


class TrainConfig(BaseModel):
    """Hyperparameters of the multi-stage training loop shared by the BNN and the point NN."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    initial_lr: float = Field(default=0.05, gt=0)
    lr_halving_patience: int = Field(default=10, ge=1)
    lr_floor: float = Field(default=0.001, gt=0)
    early_stop_patience: int = Field(default=30, ge=1)
    max_epochs: int = Field(default=1000, ge=0)
    batch_size: int = Field(default=16, ge=1)
    kl_weight_mode: Literal['minibatch', 'dataset', 'none'] = 'minibatch'
    estimator: Literal['reparameterization', 'flipout'] = 'reparameterization'
    init_rho: float = -3.0
    train_rho: bool = True
    seed: int = Field(default=0, ge=0)
    hidden_dims: List[int] = Field(default_factory=lambda: [16, 16])

    @field_validator('hidden_dims')
    @classmethod
    def _check_hidden_dims(cls, value: List[int]) -> List[int]:
        if any(width < 1 for width in value):
            raise ValueError("hidden layer widths must be positive")
        return value

    @model_validator(mode='after')
    def _check_lr(self) -> 'TrainConfig':
        if self.lr_floor > self.initial_lr:
            raise ValueError("lr_floor must not exceed initial_lr")
        return self


class EpochRecord(BaseModel):
    epoch: int
    lr: float
    loss: float
    mae: float      # cycles, deterministic pass on the training set


class TrainingHistory(BaseModel):
    """Per-epoch trace of one training run."""
    records: List[EpochRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = None
    stopped_early: bool = False

    def lr_trace(self) -> List[float]:
        return [record.lr for record in self.records]

    def mae_trace(self) -> List[float]:
        return [record.mae for record in self.records]

    def loss_trace(self) -> List[float]:
        return [record.loss for record in self.records]


class EolPrediction(BaseModel):
    """Predictive EoL distribution of one cell at one prediction cycle."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mu: float
    sigma: float = Field(..., ge=0)
    n_samples: int = Field(..., ge=2)
    ci95: Tuple[float, float]
    samples: np.ndarray
    epistemic_sd: Optional[float] = None
    aleatoric_sd: Optional[float] = None

    @model_validator(mode='after')
    def _check_interval(self) -> 'EolPrediction':
        half_width = Z_95 * self.sigma
        lower, upper = self.ci95
        if not (math.isclose(lower, self.mu - half_width, abs_tol=1e-9)
                and math.isclose(upper, self.mu + half_width, abs_tol=1e-9)):
            raise ValueError("ci95 must equal mu -/+ 1.96 sigma")
        if self.samples.shape != (self.n_samples,):
            raise ValueError("samples length must equal n_samples")
        return self

    @property
    def delta_c(self) -> float:
        """Half-width of the 95% interval, the early-warning margin in cycles."""
        return Z_95 * self.sigma

    @property
    def warning_cycle(self) -> float:
        """The cycle before which end of life is not expected (lower CI bound)."""
        return self.ci95[0]

    def contains(self, actual: float) -> bool:
        return self.ci95[0] <= actual <= self.ci95[1]


class Histogram(BaseModel):
    edges: List[float]
    probabilities: List[float]

    @property
    def peak_probability(self) -> float:
        return max(self.probabilities) if self.probabilities else 0.0


class PredictionRecord(BaseModel):
    """One JSON-lines row of a prediction report; sigma fields stay null for point models."""
    model: str
    cell_id: str
    prediction_cycle: int
    mu: float
    sigma: Optional[float] = None
    ci95: Optional[Tuple[float, float]] = None
    n_samples: Optional[int] = None
    warning_cycle: Optional[float] = None
    delta_c: Optional[float] = None
    epistemic_sd: Optional[float] = None
    aleatoric_sd: Optional[float] = None
    actual_eol: Optional[int] = None
    abs_error: Optional[float] = None
    within_ci: Optional[bool] = None
    run: Optional[int] = None
    histogram: Optional[Histogram] = None


class LayerDocument(BaseModel):
    weight_mu: List[List[float]]
    weight_rho: List[List[float]]
    bias_mu: List[float]
    bias_rho: List[float]


class ModelDocument(BaseModel):
    """Versioned text form of a trained BNN with everything needed to predict."""
    format: Literal['bnn-model-v1'] = MODEL_FORMAT
    prediction_cycle: int
    hidden_dims: List[int]
    layers: List[LayerDocument]
    head_weight: List[List[float]]
    head_bias: List[float]
    target_mean: float
    target_scale: float
    standardizer: Standardizer
    config: TrainConfig

    @model_validator(mode='after')
    def _check_dims(self) -> 'ModelDocument':
        if len(self.layers) != len(self.hidden_dims):
            raise ValueError("one layer document per hidden layer is required")
        for width, layer in zip(self.hidden_dims, self.layers):
            if len(layer.weight_mu) != width or len(layer.bias_mu) != width:
                raise ValueError("layer shape does not match hidden_dims")
        if len(self.head_weight) != 2 or len(self.head_bias) != 2:
            raise ValueError("the output head must have exactly 2 units")
        return self
