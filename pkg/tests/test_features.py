# tests/test_features.py
import math

import numpy as np
import pandas as pd
import pytest

from conftest import simple_cycle, simple_history
from core.exceptions import DegenerateFeatureError, FeatureError, InsufficientDataError
from core.features import (
    apply_standardizer, auxiliary_features, delta_q_features, fade_regression, feature_table,
    featurize, featurize_fleet, fit_standardizer, interpolate_capacity, temperature_integral,
    write_feature_table,
)
from core.synthetic import VOLTAGE_GRID, capacity_at, generate_cell
from schemas.cell_schemas import CellHistory, CycleRecord, SyntheticCellParams, VoltageCapacityCurve
from schemas.feature_schemas import FEATURE_NAMES, Standardizer


def curve_cycle(index: int, capacities) -> CycleRecord:
    curve = VoltageCapacityCurve(voltage=[3.5, 3.0, 2.5], capacity=capacities)
    return simple_cycle(index, capacity=capacities[-1]).model_copy(update={'discharge_curve': curve})


def shifted_history(reference, current, c: int = 12) -> CellHistory:
    """Cycle 10 carries `reference`, cycle c carries `current`; the rest are plain."""
    cycles = []
    for i in range(1, c + 1):
        if i == 10:
            cycles.append(curve_cycle(i, reference))
        elif i == c:
            cycles.append(curve_cycle(i, current))
        else:
            cycles.append(simple_cycle(i))
    return CellHistory(cell_id='shifted', nominal_capacity=1.1, cycles=tuple(cycles))


def test_interpolation_midpoint_and_knots():
    curve = VoltageCapacityCurve(voltage=[3.5, 2.5], capacity=[0.0, 1.0])
    np.testing.assert_allclose(interpolate_capacity(curve, [3.0]), [0.5])
    knotted = VoltageCapacityCurve(voltage=[3.5, 3.1, 2.5], capacity=[0.0, 0.2, 1.0])
    np.testing.assert_array_equal(interpolate_capacity(knotted, knotted.voltage), knotted.capacity)


def test_interpolation_rejects_grid_outside_span():
    curve = VoltageCapacityCurve(voltage=[3.5, 2.5], capacity=[0.0, 1.0])
    with pytest.raises(FeatureError):
        interpolate_capacity(curve, [3.6])


def test_interpolation_tracks_closed_form_curve():
    knots = capacity_at(VOLTAGE_GRID, 1.05, 300, 1000)[0]
    curve = VoltageCapacityCurve(voltage=VOLTAGE_GRID, capacity=knots)
    grid = np.linspace(3.5, 2.0, 1000)
    exact = capacity_at(grid, 1.05, 300, 1000)[0]
    assert np.max(np.abs(interpolate_capacity(curve, grid) - exact)) < 1e-3


def test_identical_curves_are_degenerate():
    history = shifted_history([0.0, 0.5, 1.0], [0.0, 0.5, 1.0])
    with pytest.raises(DegenerateFeatureError) as excinfo:
        delta_q_features(history, 12)
    assert excinfo.value.feature == 'dq_min'


def test_constant_shift_is_degenerate_only_in_variance():
    # A three-point grid lands on the knots, so the shift is exact.
    history = shifted_history([0.25, 0.75, 1.25], [0.0, 0.5, 1.0])
    assert delta_q_features(history, 12, grid_size=3, log_transform=False) == (-0.25, 0.0)
    with pytest.raises(DegenerateFeatureError) as excinfo:
        delta_q_features(history, 12, grid_size=3)
    assert excinfo.value.feature == 'dq_var'


def test_delta_q_uses_population_variance():
    history = shifted_history([0.0, 0.5, 1.0], [0.0, 0.4, 0.9])
    raw_min, raw_var = delta_q_features(history, 12, grid_size=3, log_transform=False)
    delta = np.array([0.0, -0.1, -0.1])
    assert raw_min == pytest.approx(-0.1)
    assert raw_var == pytest.approx(np.var(delta))


def test_delta_q_matches_dense_grid(noise_free_cell):
    current = noise_free_cell.cycle(200).discharge_curve
    reference = noise_free_cell.cycle(10).discharge_curve
    grid = np.linspace(3.5, 2.0, 100_000)
    delta = interpolate_capacity(current, grid) - interpolate_capacity(reference, grid)
    dq_min, dq_var = delta_q_features(noise_free_cell, 200)
    assert dq_min == pytest.approx(math.log10(abs(delta.min())), rel=1e-3)
    assert dq_var == pytest.approx(math.log10(delta.var()), rel=1e-3)


def test_faster_fade_gives_larger_delta_q():
    slow = generate_cell(0, SyntheticCellParams(target_eol=1000, linear_fade_rate=2e-5), 120)
    fast = generate_cell(0, SyntheticCellParams(target_eol=1000, linear_fade_rate=4e-5), 120)
    assert delta_q_features(fast, 100)[0] > delta_q_features(slow, 100)[0]


def test_fade_regression_exact_line():
    history = simple_history([1.11, 1.10, 1.09, 1.08])
    slope, intercept = fade_regression(history, 4)
    assert slope == pytest.approx(-0.01, abs=1e-12)
    assert intercept == pytest.approx(1.12, abs=1e-12)


def test_fade_regression_constant_capacity():
    slope, intercept = fade_regression(simple_history([1.0] * 6), 6)
    assert slope == pytest.approx(0.0, abs=1e-15)
    assert intercept == pytest.approx(1.0)


def test_fade_regression_matches_normal_equations(small_fleet):
    history = small_fleet[0]
    c = 150
    x = np.arange(2, c + 1, dtype=np.float64)
    y = history.discharge_capacities()[1:c]
    design = np.column_stack([x, np.ones_like(x)])
    expected = np.linalg.solve(design.T @ design, design.T @ y)
    np.testing.assert_allclose(fade_regression(history, c), expected, atol=1e-10)


def test_fade_regression_needs_three_cycles():
    with pytest.raises(FeatureError):
        fade_regression(simple_history([1.0, 0.99]), 2)


def test_fade_slope_recovers_linear_rate(noise_free_cell):
    slope, _ = fade_regression(noise_free_cell, 100)
    assert slope == pytest.approx(-2e-5, abs=1e-6)


def test_temperature_rectangle():
    assert temperature_integral(simple_cycle(1, temperature=30.0, duration=3600.0)) == pytest.approx(108000.0)


def test_auxiliary_features_on_hand_made_cells():
    history = simple_history([1.0, 0.99, 0.98, 0.97, 0.96, 0.95])
    qd2, charge_time, temp_integral, min_r, r_diff = auxiliary_features(history, 6)
    assert qd2 == 0.99
    assert charge_time == pytest.approx(10.0)
    assert temp_integral == pytest.approx(5 * 30.0 * 600.0)
    assert min_r == pytest.approx(0.02)
    assert r_diff == pytest.approx(0.0)


def test_auxiliary_features_need_five_cycles():
    with pytest.raises(FeatureError):
        auxiliary_features(simple_history([1.0] * 4), 4)


def test_resistance_diff_follows_growth(noise_free_cell):
    *_, r_diff = auxiliary_features(noise_free_cell, 300)
    assert r_diff == pytest.approx(3e-7 * 298, abs=1e-9)


def test_featurize_synthetic_cell_is_finite(noise_free_cell):
    vector = featurize(noise_free_cell, 100)
    assert vector.prediction_cycle == 100
    assert np.all(np.isfinite(vector.as_array()))


def test_featurize_rejects_reference_cycle():
    with pytest.raises(FeatureError):
        featurize(simple_history([1.0] * 12), 10)


def test_featurize_rejects_unrecorded_cycle(noise_free_cell):
    with pytest.raises(FeatureError):
        featurize(noise_free_cell, 451)


def test_featurize_ignores_future_cycles(noise_free_cell):
    assert featurize(noise_free_cell, 100) == featurize(noise_free_cell.truncated(100), 100)


def test_featurize_is_deterministic():
    params = SyntheticCellParams(target_eol=600, noise_scale=0.004)
    first = featurize(generate_cell(4, params, 60), 50)
    second = featurize(generate_cell(4, params, 60), 50)
    assert first == second


def test_standardizer_two_rows():
    matrix = np.array([np.arange(1.0, 10.0), np.arange(3.0, 12.0)])
    standardizer = fit_standardizer(matrix)
    assert standardizer.mean[0] == pytest.approx(2.0)
    assert standardizer.scale[0] == pytest.approx(math.sqrt(2.0))
    assert apply_standardizer(standardizer, matrix)[1, 0] == pytest.approx(1 / math.sqrt(2.0))


def test_standardized_training_matrix_has_unit_columns(rng):
    matrix = rng.normal(size=(30, 9)) * np.arange(1, 10) + np.arange(9)
    standardized = apply_standardizer(fit_standardizer(matrix), matrix)
    np.testing.assert_allclose(standardized.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(standardized.std(axis=0, ddof=1), 1.0, atol=1e-12)


def test_standardizer_rejects_constant_column(rng):
    matrix = rng.normal(size=(5, 9))
    matrix[:, 4] = 1.0
    with pytest.raises(FeatureError, match='qd_cycle2'):
        fit_standardizer(matrix)


def test_standardizer_needs_two_rows():
    with pytest.raises(InsufficientDataError):
        fit_standardizer(np.ones((1, 9)))


def test_standardizer_contract_rejects_zero_scale():
    with pytest.raises(ValueError):
        Standardizer(mean=[0.0], scale=[0.0])


def test_feature_table_layout(tmp_path, small_fleet):
    rows = featurize_fleet(small_fleet[:3], 100)
    table = feature_table(rows)
    assert list(table.columns) == ['cell_id', 'prediction_cycle', 'eol_cycle', *FEATURE_NAMES]
    assert len(table) == 3
    assert table['eol_cycle'].dtype == 'Int64'
    path = tmp_path / 'features.csv'
    write_feature_table(table, path)
    reloaded = pd.read_csv(path, float_precision='round_trip')
    np.testing.assert_array_equal(reloaded['dq_min'].to_numpy(), table['dq_min'].to_numpy())


def test_featurize_fleet_can_skip_failures(small_fleet):
    short = simple_history([1.0] * 20, cell_id='short')
    rows = featurize_fleet([short, small_fleet[0]], 100, skip_failures=True)
    assert [history.cell_id for history, _ in rows] == [small_fleet[0].cell_id]
    with pytest.raises(FeatureError):
        featurize_fleet([short], 100)
