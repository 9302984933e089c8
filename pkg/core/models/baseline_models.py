# core/models/baseline_models.py
"""
EolModel adapters for the comparison models. None of them emits uncertainty.
"""
import logging
from typing import Optional

import numpy as np

from core.baselines.elastic_net import ElasticNetModel
from core.baselines.knn import KnnModel
from core.baselines.point_nn import PointNnModel, train_point_nn
from core.baselines.search import select_elastic_net, select_knn
from core.models.base import EolModel
from schemas.model_schemas import TrainConfig, TrainingHistory

logger = logging.getLogger(__name__)


class PointNnEolModel(EolModel):
    name = 'nn'

    def __init__(self, config: Optional[TrainConfig] = None):
        self.config = config or TrainConfig()
        self.network: Optional[PointNnModel] = None
        self.history: Optional[TrainingHistory] = None

    def fit(self, X, y, seed):
        self.network, self.history = train_point_nn(X, y, self.config.model_copy(update={'seed': seed}))
        return self

    def predict(self, X) -> np.ndarray:
        if self.network is None:
            raise RuntimeError("the point NN has not been fitted")
        return self.network.mean_prediction(X)


class KnnEolModel(EolModel):
    name = 'knn'

    def __init__(self):
        self.model: Optional[KnnModel] = None
        self.cv_mae: Optional[float] = None

    def fit(self, X, y, seed):
        self.model, self.cv_mae = select_knn(X, y, seed=seed)
        return self

    def predict(self, X) -> np.ndarray:
        if self.model is None:
            raise RuntimeError("the kNN model has not been fitted")
        return self.model.predict(X)


class ElasticNetEolModel(EolModel):
    name = 'en'

    def __init__(self):
        self.model: Optional[ElasticNetModel] = None
        self.cv_mae: Optional[float] = None

    def fit(self, X, y, seed):
        self.model, self.cv_mae = select_elastic_net(X, y, seed=seed)
        return self

    def predict(self, X) -> np.ndarray:
        if self.model is None:
            raise RuntimeError("the elastic net has not been fitted")
        return self.model.predict(X)
