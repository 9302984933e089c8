# core/baselines/knn.py
"""k-nearest-neighbour EoL regression in standardized feature space."""
from dataclasses import dataclass

import numpy as np

from core.exceptions import InsufficientDataError


@dataclass
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.shape[0] == 0:
            raise InsufficientDataError("a kNN model needs at least one training point")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y lengths differ")
        if not 1 <= self.k <= self.X.shape[0]:
            raise ValueError(f"k must lie in [1, {self.X.shape[0]}], got {self.k}")

    def neighbours(self, x) -> np.ndarray:
        """Training indices of the k nearest points; ties go to the lower index."""
        distances = np.linalg.norm(self.X - np.asarray(x, dtype=np.float64), axis=1)
        return np.argsort(distances, kind='stable')[:self.k]

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([self.y[self.neighbours(row)].mean() for row in X])


def knn_predict(model: KnnModel, x) -> float:
    """Mean EoL of the k nearest training cells."""
    return float(model.predict(x)[0])
