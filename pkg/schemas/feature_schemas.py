# schemas/feature_schemas.py
"""
Defines the Pydantic data models (Data Contracts) for extracted features and
for the feature standardizer shared by every model.
"""
import math
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Column order of every feature matrix, CSV export and model document.
FEATURE_NAMES = (
    'dq_min', 'dq_var', 'fade_slope', 'fade_intercept', 'qd_cycle2',
    'avg_charge_time', 'temp_integral', 'min_resistance', 'resistance_diff',
)
N_FEATURES = len(FEATURE_NAMES)


class FeatureVector(BaseModel):
    """The nine early-life features of one cell at one prediction cycle."""
    model_config = ConfigDict(frozen=True)

    prediction_cycle: int = Field(..., gt=10)
    dq_min: float           # log10 Ah, or Ah in raw mode
    dq_var: float           # log10 Ah^2, or Ah^2 in raw mode
    fade_slope: float       # Ah/cycle
    fade_intercept: float   # Ah
    qd_cycle2: float        # Ah
    avg_charge_time: float  # minutes
    temp_integral: float    # degrees C * s
    min_resistance: float   # ohms
    resistance_diff: float  # ohms

    @model_validator(mode='after')
    def _check_finite(self) -> 'FeatureVector':
        bad = [name for name in FEATURE_NAMES if not math.isfinite(getattr(self, name))]
        if bad:
            raise ValueError(f"non-finite features: {', '.join(bad)}")
        return self

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)


def feature_matrix(vectors: Sequence[FeatureVector]) -> np.ndarray:
    """Stacks vectors into an (n, 9) matrix in FEATURE_NAMES order."""
    if not vectors:
        return np.empty((0, N_FEATURES))
    return np.vstack([vector.as_array() for vector in vectors])


class Standardizer(BaseModel):
    """Per-feature z-score fitted on training rows only."""
    model_config = ConfigDict(frozen=True)

    mean: List[float]
    scale: List[float]

    @model_validator(mode='after')
    def _check_scale(self) -> 'Standardizer':
        if len(self.mean) != len(self.scale):
            raise ValueError("mean and scale lengths differ")
        if any(not s > 0 for s in self.scale):
            raise ValueError("every feature SD must be positive")
        return self

    def transform(self, matrix) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape[-1] != len(self.mean):
            raise ValueError(f"expected {len(self.mean)} features, got {matrix.shape[-1]}")
        return (matrix - np.asarray(self.mean)) / np.asarray(self.scale)
