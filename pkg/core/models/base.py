# core/models/base.py
"""
Defines the abstract base class for every EoL model the experiment harness
can train. This creates a contract that any new model must follow.
"""
from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np

from schemas.model_schemas import EolPrediction


class EolModel(ABC):
    """Abstract base class for an EoL regressor on standardized features."""

    name: str = ''
    has_uncertainty: bool = False

    @abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> 'EolModel':
        """
        Trains the model.

        Args:
            X: Standardized feature matrix of the training cells.
            y: EoL labels in cycles.
            seed: Seed for every random choice the model makes.

        Returns:
            The fitted model itself.
        """

    @abstractmethod
    def predict(self, X: np.ndarray) -> np.ndarray:
        """Point predictions in cycles."""

    def predict_distribution(
        self, X: np.ndarray, rng: np.random.Generator
    ) -> Optional[List[EolPrediction]]:
        """Predictive distributions, or None for models that carry no uncertainty."""
        return None
