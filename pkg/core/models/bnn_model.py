# core/models/bnn_model.py
"""
EolModel adapter for the variational BNN.
"""
import logging
from typing import List, Optional

import numpy as np

from config import settings
from core.bnn.training import train
from core.bnn.variational import BnnModel
from core.models.base import EolModel
from core.predictor import SampleMode, predict_standardized
from schemas.model_schemas import EolPrediction, TrainConfig, TrainingHistory

logger = logging.getLogger(__name__)


class BnnEolModel(EolModel):
    name = 'bnn'
    has_uncertainty = True

    def __init__(self, config: Optional[TrainConfig] = None, n_samples: Optional[int] = None,
                 mode: SampleMode = 'total'):
        self.config = config or TrainConfig()
        self.n_samples = settings.n_prediction_samples if n_samples is None else n_samples
        self.mode = mode
        self.network: Optional[BnnModel] = None
        self.history: Optional[TrainingHistory] = None

    def fit(self, X, y, seed):
        config = self.config.model_copy(update={'seed': seed})
        self.network, self.history = train(X, y, config)
        return self

    def _require_fitted(self) -> BnnModel:
        if self.network is None:
            raise RuntimeError("the BNN has not been fitted")
        return self.network

    def predict(self, X) -> np.ndarray:
        return self._require_fitted().mean_prediction(X)

    def predict_distribution(self, X, rng) -> List[EolPrediction]:
        return predict_standardized(self._require_fitted(), X, self.n_samples, rng, self.mode)
