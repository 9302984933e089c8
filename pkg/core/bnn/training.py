# core/bnn/training.py
"""
The shared multi-stage training loop: seeded shuffling, minibatch Adam on the
network's objective, and a plateau schedule on the training-set MAE of the
deterministic pass. The parameters of the best-MAE epoch are returned.
"""
import logging
from typing import Tuple

import numpy as np

from core.bnn.network import TrainableNetwork
from core.bnn.optim import AdamState, PlateauSchedule, ScheduleAction, adam_step
from core.bnn.variational import BnnModel, initialize_bnn
from core.exceptions import InsufficientDataError, NumericalFailure
from schemas.model_schemas import EpochRecord, TrainConfig, TrainingHistory

logger = logging.getLogger(__name__)

N_STREAMS = 3


def seed_streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (init, shuffle, noise) generators derived from one seed."""
    return tuple(np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(N_STREAMS))


def target_scaling(y: np.ndarray) -> Tuple[float, float]:
    """Training-set mean and SD of the labels; SD falls back to 1 for identical labels."""
    mean = float(np.mean(y))
    scale = float(np.std(y, ddof=1)) if y.size > 1 else 0.0
    return mean, scale if scale > 0 else 1.0


def training_mae(network: TrainableNetwork, X: np.ndarray, y: np.ndarray) -> float:
    """MAE in cycles of the deterministic pass on the training set."""
    return float(np.mean(np.abs(network.mean_prediction(X) - y)))


def validate_training_set(X, y) -> Tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise InsufficientDataError(f"training needs at least 2 cells, got {X.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data contains non-finite values")
    return X, y


def fit_network(
    network: TrainableNetwork,
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    shuffle_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> Tuple[TrainableNetwork, TrainingHistory]:
    """Runs the epoch loop on `network` and returns the best-MAE snapshot with its history."""
    n = X.shape[0]
    history = TrainingHistory()
    best = network.snapshot()
    if config.max_epochs == 0:
        return best, history

    schedule = PlateauSchedule(
        config.initial_lr, config.lr_halving_patience, config.lr_floor, config.early_stop_patience
    )
    state = AdamState()
    params = network.parameters()

    for epoch in range(1, config.max_epochs + 1):
        lr = schedule.lr
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads = network.loss_and_gradients(X[batch], y[batch], noise_rng, n)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise NumericalFailure("non-finite loss or gradient during training", epoch=epoch)
            adam_step(params, grads, state, lr)
            total += loss * len(batch)

        mae = training_mae(network, X, y)
        if not np.isfinite(mae):
            raise NumericalFailure("non-finite training MAE", epoch=epoch)
        history.records.append(EpochRecord(epoch=epoch, lr=lr, loss=total / n, mae=mae))

        action = schedule.observe(mae)
        if action is ScheduleAction.IMPROVED:
            best = network.snapshot()
            history.best_epoch = epoch
        elif action is ScheduleAction.STOP:
            history.stopped_early = True
            logger.info(f"Early stop at epoch {epoch}; best training MAE {schedule.best:.2f} cycles.")
            break

    return best, history


def train(X, y, config: TrainConfig = TrainConfig()) -> Tuple[BnnModel, TrainingHistory]:
    """
    Trains a mean-field BNN on standardized features X and EoL labels y (cycles).

    Args:
        X: Standardized feature matrix, one row per training cell.
        y: EoL labels in cycles.
        config: Architecture, schedule and seed; runs are reproducible from config.seed.

    Returns:
        The model from the best-MAE epoch and the per-epoch history.
    """
    X, y = validate_training_set(X, y)
    init_rng, shuffle_rng, noise_rng = seed_streams(config.seed)
    target_mean, target_scale = target_scaling(y)
    model = initialize_bnn(
        X.shape[1], config.hidden_dims, init_rng,
        init_rho=config.init_rho, target_mean=target_mean, target_scale=target_scale,
        kl_weight_mode=config.kl_weight_mode, estimator=config.estimator, train_rho=config.train_rho,
    )
    logger.info(
        f"Training BNN {X.shape[1]}-{'-'.join(map(str, config.hidden_dims))}-2 on {X.shape[0]} cells "
        f"(seed {config.seed}, estimator {config.estimator})."
    )
    best, history = fit_network(model, X, y, config, shuffle_rng, noise_rng)
    if history.records:
        logger.info(
            f"BNN training finished after {len(history.records)} epochs; "
            f"best epoch {history.best_epoch}, MAE {history.records[history.best_epoch - 1].mae:.2f} cycles."
        )
    return best, history
