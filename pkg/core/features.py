# core/features.py
"""
Extracts the nine early-life features of a cell at a prediction cycle c:
statistics of the discharge-curve difference Q_c(V) - Q_10(V), a linear fit
of the capacity fade curve, and five auxiliary telemetry summaries.

Every feature at cycle c is computed on the history truncated to cycle c,
so later cycles can never leak into it.
"""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.stats import linregress

from config import settings
from core.exceptions import DegenerateFeatureError, FeatureError, InsufficientDataError
from schemas.cell_schemas import CellHistory, CycleRecord, VoltageCapacityCurve
from schemas.feature_schemas import FEATURE_NAMES, FeatureVector, Standardizer, feature_matrix

logger = logging.getLogger(__name__)

CHARGE_TIME_CYCLES = 5
FEATURE_TABLE_COLUMNS = ['cell_id', 'prediction_cycle', 'eol_cycle', *FEATURE_NAMES]


def interpolate_capacity(curve: VoltageCapacityCurve, grid) -> np.ndarray:
    """Piecewise-linear Q(V) evaluated on `grid`; every grid point must lie inside the curve's span."""
    grid = np.asarray(grid, dtype=np.float64)
    low, high = curve.voltage_span
    if grid.size and (grid.min() < low or grid.max() > high):
        raise FeatureError(
            f"voltage grid [{grid.min():.4f}, {grid.max():.4f}] V leaves the curve span [{low:.4f}, {high:.4f}] V"
        )
    # np.interp wants ascending knots; curves are stored with voltage descending.
    return np.interp(grid, curve.voltage[::-1], curve.capacity[::-1])


def delta_q_features(
    history: CellHistory,
    c: int,
    grid_size: Optional[int] = None,
    log_transform: Optional[bool] = None,
    reference_cycle: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Minimum and population variance of dQ(V) = Q_c(V) - Q_ref(V) on a uniform
    grid over the overlapping voltage span, as log10 magnitudes (or raw).
    """
    grid_size = settings.dq_grid_size if grid_size is None else grid_size
    log_transform = settings.dq_log_transform if log_transform is None else log_transform
    reference_cycle = settings.reference_cycle if reference_cycle is None else reference_cycle
    if grid_size < 2:
        raise FeatureError("the dQ grid needs at least 2 points")

    current = history.cycle(c).discharge_curve
    reference = history.cycle(reference_cycle).discharge_curve
    low = max(current.voltage_span[0], reference.voltage_span[0])
    high = min(current.voltage_span[1], reference.voltage_span[1])
    if not low < high:
        raise FeatureError(
            f"cell '{history.cell_id}': curves at cycles {reference_cycle} and {c} do not overlap in voltage"
        )
    grid = np.linspace(high, low, grid_size)
    delta = interpolate_capacity(current, grid) - interpolate_capacity(reference, grid)
    dq_min = float(delta.min())
    dq_var = float(delta.var())
    if not log_transform:
        return dq_min, dq_var
    if dq_min == 0.0:
        raise DegenerateFeatureError('dq_min', f"cell '{history.cell_id}' has min dQ = 0 at cycle {c}")
    if dq_var == 0.0:
        raise DegenerateFeatureError('dq_var', f"cell '{history.cell_id}' has var dQ = 0 at cycle {c}")
    return float(np.log10(abs(dq_min))), float(np.log10(dq_var))


def fade_regression(history: CellHistory, c: int) -> Tuple[float, float]:
    """Least-squares line of discharge capacity against cycle index over cycles 2..c."""
    if c < 3:
        raise FeatureError(f"fade regression needs cycles 2..c with c >= 3, got c = {c}")
    cycles = np.arange(2, c + 1)
    capacities = np.array([history.cycle(int(i)).discharge_capacity for i in cycles])
    fit = linregress(cycles.astype(np.float64), capacities)
    return float(fit.slope), float(fit.intercept)


def temperature_integral(record: CycleRecord) -> float:
    """Trapezoidal integral of one cycle's temperature over time (degrees C * s)."""
    if record.temperature.size < 2:
        return 0.0
    return float(trapezoid(record.temperature, record.temperature_time))


def auxiliary_features(history: CellHistory, c: int) -> Tuple[float, float, float, float, float]:
    """(qd_cycle2, avg_charge_time, temp_integral, min_resistance, resistance_diff) at cycle c."""
    if c < CHARGE_TIME_CYCLES:
        raise FeatureError(f"auxiliary features need c >= {CHARGE_TIME_CYCLES}, got c = {c}")
    records = [history.cycle(i) for i in range(1, c + 1)]
    after_first = records[1:]
    qd_cycle2 = records[1].discharge_capacity
    avg_charge_time = float(np.mean([record.charge_time for record in records[:CHARGE_TIME_CYCLES]]))
    temp_integral = float(sum(temperature_integral(record) for record in after_first))
    resistances = np.array([record.internal_resistance for record in after_first])
    min_resistance = float(resistances.min())
    resistance_diff = records[-1].internal_resistance - records[1].internal_resistance
    return qd_cycle2, avg_charge_time, temp_integral, min_resistance, resistance_diff


def featurize(
    history: CellHistory,
    c: int,
    grid_size: Optional[int] = None,
    log_transform: Optional[bool] = None,
) -> FeatureVector:
    """All nine features of `history` at prediction cycle `c`, computed from cycles 1..c only."""
    reference_cycle = settings.reference_cycle
    if c <= reference_cycle:
        raise FeatureError(f"prediction cycle must exceed the reference cycle {reference_cycle}, got {c}")
    if not history.has_cycle(c):
        raise FeatureError(f"cell '{history.cell_id}' has no cycle {c} (last recorded: {history.last_cycle})")
    visible = history.truncated(c)
    if visible.last_cycle != c:
        raise FeatureError(f"cell '{history.cell_id}': truncation to cycle {c} kept cycle {visible.last_cycle}")

    dq_min, dq_var = delta_q_features(visible, c, grid_size, log_transform, reference_cycle)
    fade_slope, fade_intercept = fade_regression(visible, c)
    qd_cycle2, avg_charge_time, temp_integral, min_resistance, resistance_diff = auxiliary_features(visible, c)
    return FeatureVector(
        prediction_cycle=c,
        dq_min=dq_min,
        dq_var=dq_var,
        fade_slope=fade_slope,
        fade_intercept=fade_intercept,
        qd_cycle2=qd_cycle2,
        avg_charge_time=avg_charge_time,
        temp_integral=temp_integral,
        min_resistance=min_resistance,
        resistance_diff=resistance_diff,
    )


def fit_standardizer(rows: Union[Sequence[FeatureVector], np.ndarray]) -> Standardizer:
    """Column means and sample SDs (n - 1) of the fitting rows."""
    matrix = rows if isinstance(rows, np.ndarray) else feature_matrix(rows)
    if matrix.shape[0] < 2:
        raise InsufficientDataError(f"a standardizer needs at least 2 rows, got {matrix.shape[0]}")
    scale = matrix.std(axis=0, ddof=1)
    constant = [FEATURE_NAMES[i] if matrix.shape[1] == len(FEATURE_NAMES) else str(i)
                for i in np.flatnonzero(~(scale > 0))]
    if constant:
        raise FeatureError(f"constant feature columns cannot be standardized: {', '.join(constant)}")
    return Standardizer(mean=matrix.mean(axis=0).tolist(), scale=scale.tolist())


def apply_standardizer(standardizer: Standardizer, rows: Union[FeatureVector, Sequence[FeatureVector], np.ndarray]):
    """(x - mean) / SD for one vector or a matrix of rows."""
    if isinstance(rows, FeatureVector):
        return standardizer.transform(rows.as_array())
    matrix = rows if isinstance(rows, np.ndarray) else feature_matrix(rows)
    return standardizer.transform(matrix)


def featurize_fleet(
    histories: Sequence[CellHistory], c: int, skip_failures: bool = False
) -> List[Tuple[CellHistory, FeatureVector]]:
    """Featurizes every cell at cycle c, optionally skipping cells whose features cannot be computed."""
    rows = []
    for history in histories:
        try:
            rows.append((history, featurize(history, c)))
        except FeatureError as e:
            if not skip_failures:
                raise
            logger.warning(f"Skipping cell '{history.cell_id}' at cycle {c}: {e}")
    return rows


def feature_table(rows: Sequence[Tuple[CellHistory, FeatureVector]]) -> pd.DataFrame:
    """One row per cell: cell_id, prediction_cycle, eol_cycle and the nine features."""
    records = []
    for history, vector in rows:
        record = {'cell_id': history.cell_id, 'prediction_cycle': vector.prediction_cycle,
                  'eol_cycle': history.eol_cycle}
        record.update({name: getattr(vector, name) for name in FEATURE_NAMES})
        records.append(record)
    table = pd.DataFrame.from_records(records, columns=FEATURE_TABLE_COLUMNS)
    table['eol_cycle'] = table['eol_cycle'].astype('Int64')
    return table


def write_feature_table(table: pd.DataFrame, path: Union[str, Path]) -> None:
    table.to_csv(path, index=False, float_format='%.17g')
    logger.info(f"Wrote {len(table)} feature rows to '{path}'.")
