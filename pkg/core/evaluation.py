# core/evaluation.py
"""
The experiment harness: repeated seeded train/test splits of a usable fleet,
one split per run reused across every prediction cycle, per-cycle
standardization fitted on the training cells, and run-averaged MAE, MAPE,
sigma and interval coverage for every model.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from config import settings
from core.eol import resolve_eol
from core.exceptions import InsufficientDataError
from core.features import apply_standardizer, featurize, fit_standardizer
from core.models.factory import get_model
from core.predictor import point_record, prediction_record
from schemas.cell_schemas import CellHistory
from schemas.feature_schemas import feature_matrix
from schemas.model_schemas import EolPrediction, PredictionRecord, TrainConfig
from schemas.report_schemas import CycleSummary, ExcludedRun, ExperimentReport, RunMetrics

logger = logging.getLogger(__name__)

SAMPLING_STREAM = 1


def metrics(predictions, actuals) -> Tuple[float, float]:
    """(MAE in cycles, MAPE in percent)."""
    predictions = np.asarray(predictions, dtype=np.float64).ravel()
    actuals = np.asarray(actuals, dtype=np.float64).ravel()
    if predictions.shape != actuals.shape:
        raise ValueError(f"{predictions.size} predictions but {actuals.size} actuals")
    if predictions.size == 0:
        raise ValueError("metrics need at least one prediction")
    if np.any(actuals <= 0):
        raise ValueError("actual EoL values must be positive")
    errors = np.abs(predictions - actuals)
    return float(errors.mean()), float(np.mean(errors / actuals) * 100.0)


def ci_coverage(predictions: Sequence[EolPrediction], actuals) -> float:
    """Percentage of actuals inside their prediction's 95% interval (bounds inclusive)."""
    actuals = np.asarray(actuals, dtype=np.float64).ravel()
    if len(predictions) != actuals.size:
        raise ValueError(f"{len(predictions)} predictions but {actuals.size} actuals")
    if actuals.size == 0:
        raise ValueError("coverage needs at least one prediction")
    inside = sum(prediction.contains(actual) for prediction, actual in zip(predictions, actuals))
    return 100.0 * inside / actuals.size


def run_seed(base_seed: int, run: int) -> int:
    """Seed of one run, derived from (base_seed, run) so each run is reproducible alone."""
    # scikit-learn only accepts seeds below 2**32.
    return int(np.random.SeedSequence([base_seed, run]).generate_state(1, dtype=np.uint32)[0])


def split_indices(n: int, train_frac: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Disjoint (train, test) index sets covering range(n)."""
    n_train = int(round(train_frac * n))
    n_train = min(max(n_train, 2), n - 1)
    if n < 3 or n_train < 2:
        raise InsufficientDataError(f"a train/test split needs at least 3 cells, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def fleet_features(histories: Sequence[CellHistory], c: int) -> np.ndarray:
    """Feature matrix of the fleet at cycle c; every row is computed from cycles 1..c only."""
    vectors = []
    for history in histories:
        vector = featurize(history, c)
        if vector.prediction_cycle != c:
            raise AssertionError(f"cell '{history.cell_id}' featurized at cycle {vector.prediction_cycle}, not {c}")
        vectors.append(vector)
    return feature_matrix(vectors)


def _evaluate_model(
    name: str,
    run: int,
    seed: int,
    c: int,
    base_seed: int,
    X: np.ndarray,
    y: np.ndarray,
    train: np.ndarray,
    test: np.ndarray,
    cell_ids: Sequence[str],
    config: Optional[TrainConfig],
    collect: bool,
) -> Tuple[RunMetrics, List[PredictionRecord]]:
    standardizer = fit_standardizer(X[train])
    X_train, X_test = apply_standardizer(standardizer, X[train]), apply_standardizer(standardizer, X[test])
    model = get_model(name, config).fit(X_train, y[train], seed)

    fields = {}
    records: List[PredictionRecord] = []
    if model.has_uncertainty:
        rng = np.random.default_rng(np.random.SeedSequence([base_seed, run, c, SAMPLING_STREAM]))
        train_pred = model.predict_distribution(X_train, rng)
        test_pred = model.predict_distribution(X_test, rng)
        train_point = np.array([p.mu for p in train_pred])
        test_point = np.array([p.mu for p in test_pred])
        fields.update(
            train_sigma=float(np.mean([p.sigma for p in train_pred])),
            test_sigma=float(np.mean([p.sigma for p in test_pred])),
            train_coverage=ci_coverage(train_pred, y[train]),
            test_coverage=ci_coverage(test_pred, y[test]),
        )
        if collect:
            records = [
                prediction_record(p, cell_ids[i], c, name, int(y[i]), run)
                for p, i in zip(test_pred, test)
            ]
    else:
        train_point = model.predict(X_train)
        test_point = model.predict(X_test)
        if collect:
            records = [point_record(v, cell_ids[i], c, name, int(y[i]), run) for v, i in zip(test_point, test)]

    train_mae, train_mape = metrics(train_point, y[train])
    test_mae, test_mape = metrics(test_point, y[test])
    result = RunMetrics(
        run=run, seed=seed, model=name, prediction_cycle=c, n_train=len(train), n_test=len(test),
        train_mae=train_mae, test_mae=test_mae, train_mape=train_mape, test_mape=test_mape, **fields,
    )
    return result, records


def _run_once(
    run: int,
    base_seed: int,
    train_frac: float,
    model_names: Sequence[str],
    features: Dict[int, np.ndarray],
    y: np.ndarray,
    cell_ids: Sequence[str],
    config: Optional[TrainConfig],
    collect: bool,
) -> Tuple[List[RunMetrics], List[ExcludedRun], List[PredictionRecord]]:
    seed = run_seed(base_seed, run)
    train, test = split_indices(len(y), train_frac, seed)
    if np.intersect1d(train, test).size or len(train) + len(test) != len(y):
        raise AssertionError("train/test split is not a partition of the fleet")

    results, excluded, records = [], [], []
    for c, X in features.items():
        for name in model_names:
            try:
                result, model_records = _evaluate_model(
                    name, run, seed, c, base_seed, X, y, train, test, cell_ids, config, collect
                )
            except ArithmeticError as e:
                logger.warning(f"Excluding run {run}, model '{name}', cycle {c}: {e}")
                excluded.append(ExcludedRun(run=run, model=name, prediction_cycle=c, reason=str(e)))
                continue
            results.append(result)
            records.extend(model_records)
    logger.info(f"Run {run} finished ({len(results)} model/cycle results, {len(excluded)} excluded).")
    return results, excluded, records


def _mean_or_none(values: List[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def summarize(results: Sequence[RunMetrics], model: str, c: int) -> Optional[CycleSummary]:
    """Arithmetic means over the runs that produced a result for (model, c)."""
    rows = [r for r in results if r.model == model and r.prediction_cycle == c]
    if not rows:
        return None
    averaged = {
        key: float(np.mean([getattr(r, key) for r in rows]))
        for key in ('train_mae', 'test_mae', 'train_mape', 'test_mape')
    }
    for key in ('train_sigma', 'test_sigma', 'train_coverage', 'test_coverage'):
        averaged[key] = _mean_or_none([getattr(r, key) for r in rows])
    gap = None
    if averaged['train_mae'] > 0:
        gap = (averaged['test_mae'] - averaged['train_mae']) / averaged['train_mae'] * 100.0
    return CycleSummary(model=model, prediction_cycle=c, n_runs=len(rows), overfit_gap_pct=gap, **averaged)


def uncertainty_trend(summaries: Sequence[CycleSummary], model: str) -> Optional[float]:
    """How much larger (in %) mean test sigma is at the earliest cycle than at the latest."""
    rows = sorted((s for s in summaries if s.model == model and s.test_sigma is not None),
                  key=lambda s: s.prediction_cycle)
    if len(rows) < 2 or not rows[-1].test_sigma > 0:
        return None
    return (rows[0].test_sigma - rows[-1].test_sigma) / rows[-1].test_sigma * 100.0


def run_experiment(
    histories: Sequence[CellHistory],
    models: Sequence[str] = ('bnn',),
    cycles: Optional[Sequence[int]] = None,
    n_runs: Optional[int] = None,
    train_frac: Optional[float] = None,
    base_seed: int = 0,
    config: Optional[TrainConfig] = None,
    n_jobs: Optional[int] = None,
    not_implemented: Sequence[str] = (),
    prediction_sink: Optional[List[PredictionRecord]] = None,
) -> ExperimentReport:
    """
    Repeats (split, featurize, standardize, train, evaluate) over seeded runs.

    Args:
        histories: Usable cells (see core.eol.filter_usable), each with a resolvable EoL.
        models: Model names understood by core.models.factory.get_model.
        cycles: Prediction cycles; each run reuses its split across all of them.
        n_runs: Number of independent runs.
        train_frac: Fraction of cells in each training split.
        base_seed: Root of every per-run seed.
        config: Training configuration for the network models.
        n_jobs: joblib workers over runs.
        not_implemented: Requested model names recorded as not implemented.
        prediction_sink: If given, receives the test-set prediction records of every run.

    Returns:
        The run-averaged report; runs that failed numerically are listed under `excluded`.
    """
    cycles = list(settings.prediction_cycles if cycles is None else cycles)
    n_runs = settings.n_runs if n_runs is None else n_runs
    train_frac = settings.train_frac if train_frac is None else train_frac
    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if not models:
        raise ValueError("at least one model is required")
    if len(histories) < 3:
        raise InsufficientDataError(f"an experiment needs at least 3 usable cells, got {len(histories)}")

    y = np.array([resolve_eol(history) for history in histories], dtype=np.float64)
    cell_ids = [history.cell_id for history in histories]
    logger.info(f"Featurizing {len(histories)} cells at cycles {cycles}.")
    features = {c: fleet_features(histories, c) for c in cycles}

    logger.info(f"Starting experiment: {n_runs} runs, models {list(models)}, base seed {base_seed}.")
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_run_once)(
            run, base_seed, train_frac, list(models), features, y, cell_ids, config, prediction_sink is not None
        )
        for run in range(n_runs)
    )

    results = [r for outcome in outcomes for r in outcome[0]]
    excluded = [e for outcome in outcomes for e in outcome[1]]
    if prediction_sink is not None:
        prediction_sink.extend(record for outcome in outcomes for record in outcome[2])

    summaries = [s for c in cycles for m in models if (s := summarize(results, m, c)) is not None]
    report = ExperimentReport(
        models=list(models),
        prediction_cycles=cycles,
        n_runs=n_runs,
        base_seed=base_seed,
        train_frac=train_frac,
        seeds=[run_seed(base_seed, run) for run in range(n_runs)],
        n_cells=len(histories),
        summaries=summaries,
        runs=results,
        excluded=excluded,
        not_implemented=list(not_implemented),
        uncertainty_trend={m: uncertainty_trend(summaries, m) for m in models if get_model(m).has_uncertainty},
    )
    if excluded:
        logger.warning(f"{len(excluded)} model/cycle results were excluded after numerical failures.")
    logger.info("Experiment finished.")
    return report


def write_report(report: ExperimentReport, table_path: Optional[Union[str, Path]] = None,
                 json_path: Optional[Union[str, Path]] = None) -> None:
    if table_path is not None:
        report.table().to_csv(table_path, index=False, float_format='%.17g')
        logger.info(f"Wrote experiment table to '{table_path}'.")
    if json_path is not None:
        Path(json_path).write_text(report.model_dump_json(indent=2), encoding='utf-8')
        logger.info(f"Wrote experiment report to '{json_path}'.")
