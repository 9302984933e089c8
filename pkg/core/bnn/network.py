# core/bnn/network.py
"""
Defines the abstract base class for networks trained by the shared
multi-stage training loop. The Bayesian network and the deterministic
baseline network both follow this contract.
"""
from abc import ABC, abstractmethod
from typing import Dict, Tuple

import numpy as np


class TrainableNetwork(ABC):
    """A network whose parameters are a flat dict of arrays updated in place."""

    target_mean: float = 0.0
    target_scale: float = 1.0

    @abstractmethod
    def parameters(self) -> Dict[str, np.ndarray]:
        """Named parameter arrays, in a stable order; the arrays are the live storage."""

    @abstractmethod
    def loss_and_gradients(
        self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator, n_train: int
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        """
        Minibatch objective and its exact gradients.

        Args:
            X: Standardized features, shape (batch, n_features).
            y: Targets in cycles.
            rng: Source of any sampling noise the objective needs.
            n_train: Size of the full training set.
        """

    @abstractmethod
    def mean_prediction(self, X: np.ndarray) -> np.ndarray:
        """Deterministic point prediction in cycles."""

    @abstractmethod
    def snapshot(self) -> 'TrainableNetwork':
        """An independent deep copy."""

    def standardize_targets(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=np.float64) - self.target_mean) / self.target_scale

    def unstandardize(self, values) -> np.ndarray:
        return self.target_mean + self.target_scale * np.asarray(values, dtype=np.float64)
