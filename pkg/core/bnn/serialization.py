# core/bnn/serialization.py
"""
Converts trained BNNs to and from the versioned "bnn-model-v1" JSON document.
Floats are written in their shortest round-trip form, so a loaded model
reproduces the deterministic pass bit for bit.
"""
import logging
from pathlib import Path
from typing import Tuple, Union

from pydantic import ValidationError

from core.bnn.variational import BnnModel, DenseLayer, GaussianVariational, VariationalDenseLayer
from schemas.feature_schemas import Standardizer
from schemas.model_schemas import LayerDocument, ModelDocument, TrainConfig

logger = logging.getLogger(__name__)


def to_document(
    model: BnnModel, standardizer: Standardizer, config: TrainConfig, prediction_cycle: int
) -> ModelDocument:
    layers = [
        LayerDocument(
            weight_mu=layer.weight.mu.tolist(), weight_rho=layer.weight.rho.tolist(),
            bias_mu=layer.bias.mu.tolist(), bias_rho=layer.bias.rho.tolist(),
        )
        for layer in model.hidden
    ]
    return ModelDocument(
        prediction_cycle=prediction_cycle,
        hidden_dims=model.hidden_dims,
        layers=layers,
        head_weight=model.head.weight.tolist(),
        head_bias=model.head.bias.tolist(),
        target_mean=model.target_mean,
        target_scale=model.target_scale,
        standardizer=standardizer,
        config=config,
    )


def from_document(document: ModelDocument) -> BnnModel:
    hidden = [
        VariationalDenseLayer(
            weight=GaussianVariational(mu=layer.weight_mu, rho=layer.weight_rho),
            bias=GaussianVariational(mu=layer.bias_mu, rho=layer.bias_rho),
        )
        for layer in document.layers
    ]
    config = document.config
    return BnnModel(
        hidden=hidden,
        head=DenseLayer(weight=document.head_weight, bias=document.head_bias),
        target_mean=document.target_mean,
        target_scale=document.target_scale,
        kl_weight_mode=config.kl_weight_mode,
        estimator=config.estimator,
        train_rho=config.train_rho,
    )


def save_model(
    path: Union[str, Path], model: BnnModel, standardizer: Standardizer, config: TrainConfig, prediction_cycle: int
) -> None:
    document = to_document(model, standardizer, config, prediction_cycle)
    Path(path).write_text(document.model_dump_json(indent=2), encoding='utf-8')
    logger.info(f"Saved BNN model for prediction cycle {prediction_cycle} to '{path}'.")


def load_model(path: Union[str, Path]) -> Tuple[BnnModel, ModelDocument]:
    """Reads a model document; the document carries the standardizer and prediction cycle."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    try:
        document = ModelDocument.model_validate_json(path.read_text(encoding='utf-8'))
    except ValidationError as e:
        raise ValueError(f"'{path}' is not a valid bnn-model-v1 document: {e.errors()[0].get('msg')}")
    logger.info(f"Loaded BNN model from '{path}' (prediction cycle {document.prediction_cycle}).")
    return from_document(document), document
