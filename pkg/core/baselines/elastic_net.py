# core/baselines/elastic_net.py
"""
Elastic net by cyclic coordinate descent with soft-thresholding, minimizing

    (1/2n) ||y - X beta - b||^2 + lam * (alpha ||beta||_1 + (1 - alpha)/2 ||beta||^2).

The intercept is left unpenalized by working on centered data.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from core.exceptions import ConvergenceError, InsufficientDataError

logger = logging.getLogger(__name__)


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def elastic_net_objective(beta, intercept, X, y, lam, alpha) -> float:
    residual = y - X @ beta - intercept
    penalty = lam * (alpha * np.sum(np.abs(beta)) + 0.5 * (1.0 - alpha) * np.dot(beta, beta))
    return float(np.dot(residual, residual) / (2.0 * y.shape[0]) + penalty)


@dataclass
class ElasticNetModel:
    coef: np.ndarray
    intercept: float
    lam: float
    alpha: float
    n_iter: int = 0
    objective_trace: List[float] = field(default_factory=list)
    # Targets are modelled as (y - target_mean) / target_scale when fitted through the scaled wrapper.
    target_mean: float = 0.0
    target_scale: float = 1.0

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self.target_mean + self.target_scale * (X @ self.coef + self.intercept)


def fit_elastic_net(X, y, lam: float, alpha: float, tol: float = 1e-8, max_iter: int = 100_000) -> ElasticNetModel:
    """Coordinate descent until the largest coefficient change in a sweep falls below `tol`."""
    if lam < 0:
        raise ValueError(f"lam must be non-negative, got {lam}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = X.shape
    if n < 1 or n != y.shape[0]:
        raise InsufficientDataError("elastic net needs matching, non-empty X and y")

    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    column_scale = (Xc ** 2).sum(axis=0) / n
    l1, l2 = lam * alpha, lam * (1.0 - alpha)

    beta = np.zeros(p)
    residual = yc.copy()
    trace = [elastic_net_objective(beta, 0.0, Xc, yc, lam, alpha)]
    delta = np.inf
    for sweep in range(1, max_iter + 1):
        delta = 0.0
        for j in range(p):
            if column_scale[j] == 0.0:
                continue
            old = beta[j]
            rho = Xc[:, j] @ residual / n + column_scale[j] * old
            beta[j] = soft_threshold(rho, l1) / (column_scale[j] + l2)
            if beta[j] != old:
                residual -= Xc[:, j] * (beta[j] - old)
                delta = max(delta, abs(beta[j] - old))
        trace.append(elastic_net_objective(beta, 0.0, Xc, yc, lam, alpha))
        if delta < tol:
            return ElasticNetModel(
                coef=beta, intercept=float(y_mean - x_mean @ beta), lam=lam, alpha=alpha,
                n_iter=sweep, objective_trace=trace,
            )
    raise ConvergenceError(f"elastic net (lam={lam:g}, alpha={alpha:g}) did not converge in {max_iter} sweeps", delta)


def fit_scaled_elastic_net(X, y, lam: float, alpha: float, **options) -> ElasticNetModel:
    """Fits on standardized targets so one lam grid suits labels of any scale."""
    y = np.asarray(y, dtype=np.float64).ravel()
    mean = float(y.mean())
    scale = float(y.std(ddof=1)) if y.size > 1 else 0.0
    scale = scale if scale > 0 else 1.0
    model = fit_elastic_net(X, (y - mean) / scale, lam, alpha, **options)
    model.target_mean, model.target_scale = mean, scale
    return model
