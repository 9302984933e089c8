# core/baselines/search.py
"""
Hyperparameter selection for the kNN and elastic-net baselines by k-fold
cross-validation on the training split only.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.model_selection import KFold

from config import settings
from core.baselines.elastic_net import ElasticNetModel, fit_scaled_elastic_net
from core.baselines.knn import KnnModel
from core.exceptions import ConvergenceError, InsufficientDataError

logger = logging.getLogger(__name__)


def _folds(n: int, n_folds: int, seed: int):
    """Shuffled KFold splits; any non-negative seed is folded into the 32-bit range KFold accepts."""
    n_folds = min(n_folds, n)
    if n_folds < 2:
        raise InsufficientDataError(f"cross-validation needs at least 2 cells, got {n}")
    fold_seed = int(np.random.SeedSequence(seed).generate_state(1)[0])
    return list(KFold(n_splits=n_folds, shuffle=True, random_state=fold_seed).split(np.arange(n)))


def select_knn(
    X, y, grid: Optional[Sequence[int]] = None, n_folds: Optional[int] = None, seed: int = 0
) -> Tuple[KnnModel, float]:
    """Best k by cross-validated MAE (smallest k wins ties), refitted on all rows."""
    grid = settings.knn_grid if grid is None else grid
    n_folds = settings.cv_folds if n_folds is None else n_folds
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)
    folds = _folds(len(y), n_folds, seed)
    smallest_fold_train = min(len(train) for train, _ in folds)
    candidates = sorted(k for k in grid if k <= smallest_fold_train) or [min(smallest_fold_train, len(y))]

    best_k, best_mae = candidates[0], np.inf
    for k in candidates:
        errors = [
            np.abs(KnnModel(X[train], y[train], k).predict(X[valid]) - y[valid])
            for train, valid in folds
        ]
        mae = float(np.mean(np.concatenate(errors)))
        if mae < best_mae:
            best_k, best_mae = k, mae
    logger.info(f"kNN search selected k={best_k} (CV MAE {best_mae:.2f} cycles).")
    return KnnModel(X, y, best_k), best_mae


def select_elastic_net(
    X,
    y,
    lambda_grid: Optional[Sequence[float]] = None,
    alpha_grid: Optional[Sequence[float]] = None,
    n_folds: Optional[int] = None,
    seed: int = 0,
) -> Tuple[ElasticNetModel, float]:
    """Best (lam, alpha) by cross-validated MAE; non-converging combinations are skipped."""
    lambda_grid = settings.en_lambda_grid if lambda_grid is None else lambda_grid
    alpha_grid = settings.en_alpha_grid if alpha_grid is None else alpha_grid
    n_folds = settings.cv_folds if n_folds is None else n_folds
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)
    folds = _folds(len(y), n_folds, seed)

    best, best_mae = None, np.inf
    for lam in lambda_grid:
        for alpha in alpha_grid:
            try:
                errors = [
                    np.abs(fit_scaled_elastic_net(X[train], y[train], lam, alpha).predict(X[valid]) - y[valid])
                    for train, valid in folds
                ]
            except ConvergenceError as e:
                logger.warning(f"Skipping elastic net lam={lam:g}, alpha={alpha:g}: {e}")
                continue
            mae = float(np.mean(np.concatenate(errors)))
            if mae < best_mae:
                best, best_mae = (lam, alpha), mae
    if best is None:
        raise ConvergenceError("no elastic-net configuration converged", final_delta=float('nan'))
    logger.info(f"Elastic net search selected lam={best[0]:g}, alpha={best[1]:g} (CV MAE {best_mae:.2f} cycles).")
    return fit_scaled_elastic_net(X, y, *best), best_mae
