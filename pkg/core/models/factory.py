# core/models/factory.py
"""
Factory module to instantiate EoL models by name.
"""
import logging
from typing import List, Optional, Sequence, Tuple

from core.models.base import EolModel
from core.models.baseline_models import ElasticNetEolModel, KnnEolModel, PointNnEolModel
from core.models.bnn_model import BnnEolModel
from schemas.model_schemas import TrainConfig

logger = logging.getLogger(__name__)

MODEL_NAMES = ('bnn', 'nn', 'knn', 'en')
# Comparison models named in the study but deliberately absent here.
NOT_IMPLEMENTED = ('svr',)


def get_model(name: str, config: Optional[TrainConfig] = None) -> EolModel:
    """
    Returns a fresh, unfitted model for `name`. Each experiment run needs its
    own instance, so nothing is cached here.
    """
    key = name.strip().lower()
    if key == 'bnn':
        return BnnEolModel(config)
    if key == 'nn':
        return PointNnEolModel(config)
    if key == 'knn':
        return KnnEolModel()
    if key == 'en':
        return ElasticNetEolModel()
    if key in NOT_IMPLEMENTED:
        raise NotImplementedError(f"model '{key}' is not implemented")
    raise ValueError(f"Unsupported model: {name}")


def parse_model_names(names: Sequence[str]) -> Tuple[List[str], List[str]]:
    """Splits requested names into (available, not implemented); unknown names raise."""
    available, missing = [], []
    for name in names:
        key = name.strip().lower()
        if not key:
            continue
        if key in MODEL_NAMES:
            if key not in available:
                available.append(key)
        elif key in NOT_IMPLEMENTED:
            logger.warning(f"Model '{key}' is not implemented; it will be listed as such in the report.")
            missing.append(key)
        else:
            raise ValueError(f"Unsupported model: {name}")
    return available, missing
