# core/predictor.py
"""
Turns a trained BNN and a feature vector into an EoL distribution: repeated
posterior sampling, a Gaussian fit and its 95% interval. Each sample is one
weight draw followed by one draw from the predicted output Gaussian, so the
spread carries both weight (epistemic) and output (aleatoric) uncertainty.
Every row of a batch samples from its own random stream, so a cell's
prediction does not depend on the other cells predicted alongside it.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd

from config import settings
from core.bnn.variational import BnnModel, forward, head_distribution
from core.exceptions import InsufficientDataError
from core.features import apply_standardizer, featurize
from schemas.cell_schemas import CellHistory
from schemas.feature_schemas import Standardizer
from schemas.model_schemas import Z_95, EolPrediction, Histogram, PredictionRecord

logger = logging.getLogger(__name__)

SampleMode = Literal['total', 'mean']


def _row_generators(rng: np.random.Generator, rows: int) -> List[np.random.Generator]:
    """One independent stream per row; row j's stream depends only on rng's state and j."""
    entropy = int(rng.integers(0, 2 ** 63))
    return [np.random.default_rng(child) for child in np.random.SeedSequence(entropy).spawn(rows)]


def _posterior_draws(model: BnnModel, x: np.ndarray, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Head means and SDs in cycles for one row, shape (n,); a fresh weight draw per sample."""
    means = np.empty(n)
    sds = np.empty(n)
    for i in range(n):
        out, _ = forward(model, x[None, :], model.draw_noise(rng, estimator='reparameterization'))
        mean, sd = head_distribution(out)
        means[i] = model.unstandardize(mean)[0]
        sds[i] = model.target_scale * sd[0]
    return means, sds


def _sample(model, X, n, rng, mode: SampleMode):
    """(samples, means, sds), each shape (n, rows); every row draws its own weights."""
    if n < 2:
        raise InsufficientDataError(f"at least 2 samples are needed, got {n}")
    if mode not in ('total', 'mean'):
        raise ValueError(f"unknown sample mode '{mode}'")
    if X.shape[1] != model.input_dim:
        raise ValueError(f"expected {model.input_dim} input features, got {X.shape[1]}")
    samples, means, sds = (np.empty((n, X.shape[0])) for _ in range(3))
    for j, row_rng in enumerate(_row_generators(rng, X.shape[0])):
        means[:, j], sds[:, j] = _posterior_draws(model, X[j], n, row_rng)
        samples[:, j] = means[:, j] if mode == 'mean' else means[:, j] + sds[:, j] * row_rng.standard_normal(n)
    return samples, means, sds


def sample_predictions(
    model: BnnModel, x, n: Optional[int] = None, rng: Optional[np.random.Generator] = None,
    mode: SampleMode = 'total',
) -> np.ndarray:
    """
    n EoL samples (cycles) for one standardized vector, shape (n,), or for a
    matrix of rows, shape (n, rows). mode='mean' keeps only the head means.
    """
    n = settings.n_prediction_samples if n is None else n
    rng = rng if rng is not None else np.random.default_rng()
    single = np.asarray(x).ndim == 1
    samples, _, _ = _sample(model, np.atleast_2d(np.asarray(x, dtype=np.float64)), n, rng, mode)
    return samples[:, 0] if single else samples


def fit_gaussian(samples) -> Tuple[float, float]:
    """Sample mean and (n - 1)-denominator SD."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < 2:
        raise InsufficientDataError(f"fitting a Gaussian needs at least 2 samples, got {samples.size}")
    return float(samples.mean()), float(samples.std(ddof=1))


def ci95(mu: float, sigma: float) -> Tuple[float, float]:
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    return mu - Z_95 * sigma, mu + Z_95 * sigma


def _package(samples: np.ndarray, means: np.ndarray, sds: np.ndarray) -> EolPrediction:
    mu, sigma = fit_gaussian(samples)
    return EolPrediction(
        mu=mu,
        sigma=sigma,
        n_samples=samples.size,
        ci95=ci95(mu, sigma),
        samples=samples,
        epistemic_sd=float(means.std(ddof=1)),
        aleatoric_sd=float(np.sqrt(np.mean(sds ** 2))),
    )


def predict_standardized(
    model: BnnModel, X_std, n: Optional[int] = None, rng: Optional[np.random.Generator] = None,
    mode: SampleMode = 'total',
) -> List[EolPrediction]:
    """One EolPrediction per row of an already standardized matrix."""
    n = settings.n_prediction_samples if n is None else n
    rng = rng if rng is not None else np.random.default_rng()
    X_std = np.atleast_2d(np.asarray(X_std, dtype=np.float64))
    samples, means, sds = _sample(model, X_std, n, rng, mode)
    return [_package(samples[:, j].copy(), means[:, j], sds[:, j]) for j in range(X_std.shape[0])]


def predict(
    model: BnnModel,
    standardizer: Standardizer,
    history: CellHistory,
    c: int,
    n: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    mode: SampleMode = 'total',
) -> EolPrediction:
    """featurize -> standardize -> sample -> Gaussian fit -> 95% interval."""
    vector = featurize(history, c)
    x = apply_standardizer(standardizer, vector)
    return predict_standardized(model, x, n, rng, mode)[0]


def sample_histogram(samples, bins: Optional[int] = None) -> Histogram:
    """Per-bin probabilities of the samples, for density plots."""
    bins = settings.histogram_bins if bins is None else bins
    samples = np.asarray(samples, dtype=np.float64)
    counts, edges = np.histogram(samples, bins=bins)
    return Histogram(edges=edges.tolist(), probabilities=(counts / samples.size).tolist())


def prediction_record(
    prediction: EolPrediction,
    cell_id: str,
    c: int,
    model_name: str = 'bnn',
    actual_eol: Optional[int] = None,
    run: Optional[int] = None,
    bins: Optional[int] = None,
) -> PredictionRecord:
    """A JSON-lines row for one BNN prediction, with error fields when the actual EoL is known."""
    return PredictionRecord(
        model=model_name,
        cell_id=cell_id,
        prediction_cycle=c,
        mu=prediction.mu,
        sigma=prediction.sigma,
        ci95=prediction.ci95,
        n_samples=prediction.n_samples,
        warning_cycle=prediction.warning_cycle,
        delta_c=prediction.delta_c,
        epistemic_sd=prediction.epistemic_sd,
        aleatoric_sd=prediction.aleatoric_sd,
        actual_eol=actual_eol,
        abs_error=abs(prediction.mu - actual_eol) if actual_eol is not None else None,
        within_ci=prediction.contains(actual_eol) if actual_eol is not None else None,
        run=run,
        histogram=sample_histogram(prediction.samples, bins) if bins is not None else None,
    )


def point_record(
    value: float, cell_id: str, c: int, model_name: str, actual_eol: Optional[int] = None, run: Optional[int] = None
) -> PredictionRecord:
    """A JSON-lines row for a model without uncertainty; sigma fields stay null."""
    return PredictionRecord(
        model=model_name, cell_id=cell_id, prediction_cycle=c, mu=float(value),
        actual_eol=actual_eol,
        abs_error=abs(float(value) - actual_eol) if actual_eol is not None else None,
        run=run,
    )


def write_jsonl(records: Iterable[PredictionRecord], path: Union[str, Path]) -> int:
    count = 0
    with Path(path).open('w', encoding='utf-8') as handle:
        for record in records:
            handle.write(record.model_dump_json())
            handle.write("\n")
            count += 1
    logger.info(f"Wrote {count} prediction records to '{path}'.")
    return count


def histogram_table(records: Iterable[PredictionRecord]) -> pd.DataFrame:
    """Long-format density table: one row per (cell, cycle, bin)."""
    rows = []
    for record in records:
        if record.histogram is None:
            continue
        edges = record.histogram.edges
        for i, probability in enumerate(record.histogram.probabilities):
            rows.append({
                'cell_id': record.cell_id, 'prediction_cycle': record.prediction_cycle,
                'bin_left': edges[i], 'bin_right': edges[i + 1], 'probability': probability,
            })
    return pd.DataFrame(rows, columns=['cell_id', 'prediction_cycle', 'bin_left', 'bin_right', 'probability'])
