# tests/test_predictor.py
import json

import numpy as np
import pytest
from pydantic import ValidationError

from core.bnn.variational import initialize_bnn, softplus
from core.exceptions import InsufficientDataError
from core.features import featurize_fleet, fit_standardizer
from core.predictor import (
    ci95, fit_gaussian, histogram_table, point_record, predict, predict_standardized, prediction_record,
    sample_histogram, sample_predictions, write_jsonl,
)
from schemas.feature_schemas import feature_matrix
from schemas.model_schemas import EolPrediction, PredictionRecord


@pytest.fixture
def model():
    return initialize_bnn(9, [16, 16], np.random.default_rng(8), init_rho=-2.0, target_mean=800.0, target_scale=60.0)


def test_fit_gaussian_uses_sample_sd():
    assert fit_gaussian([700.0, 800.0, 900.0]) == (800.0, 100.0)
    assert fit_gaussian([512.0] * 4) == (512.0, 0.0)


def test_fit_gaussian_recovers_known_distribution():
    mu, sigma = fit_gaussian(np.random.default_rng(0).normal(500.0, 50.0, size=1000))
    assert 495.0 <= mu <= 505.0
    assert 47.0 <= sigma <= 53.0


def test_fit_gaussian_is_translation_equivariant(rng):
    samples = rng.normal(800.0, 40.0, size=50)
    mu, sigma = fit_gaussian(samples)
    shifted_mu, shifted_sigma = fit_gaussian(samples + 123.0)
    assert shifted_mu == pytest.approx(mu + 123.0, abs=1e-9)
    assert shifted_sigma == pytest.approx(sigma, abs=1e-9)


def test_fit_gaussian_needs_two_samples():
    with pytest.raises(InsufficientDataError):
        fit_gaussian([800.0])


def test_case_study_interval():
    lower, upper = ci95(848.5, 63.0)
    assert lower == pytest.approx(725.0, abs=0.5)
    assert upper == pytest.approx(972.0, abs=0.5)
    assert ci95(800.0, 0.0) == (800.0, 800.0)


def test_interval_rejects_negative_sigma():
    with pytest.raises(ValueError):
        ci95(800.0, -1.0)


def test_interval_covers_ninety_five_percent():
    rng = np.random.default_rng(17)
    mu, sigma = rng.uniform(500, 2000), rng.uniform(10, 200)
    lower, upper = ci95(mu, sigma)
    draws = rng.normal(mu, sigma, size=100_000)
    assert 0.94 <= np.mean((draws >= lower) & (draws <= upper)) <= 0.96


def test_collapsed_model_samples_equal_deterministic_mean():
    model = initialize_bnn(9, [8], np.random.default_rng(1), init_rho=-40.0, target_mean=900.0, target_scale=10.0)
    model.head.weight[1] = 0.0
    model.head.bias[1] = -50.0
    x = np.random.default_rng(2).normal(size=9)
    samples = sample_predictions(model, x, n=100, rng=np.random.default_rng(3))
    np.testing.assert_allclose(samples, model.mean_prediction(x[None, :])[0], atol=1e-4)


def test_seeded_sampling_is_reproducible(model, rng):
    x = rng.normal(size=9)
    first = sample_predictions(model, x, n=30, rng=np.random.default_rng(4))
    second = sample_predictions(model, x, n=30, rng=np.random.default_rng(4))
    np.testing.assert_array_equal(first, second)


def _independent_samples(model, x, n, rng):
    """Weight draw then output draw, written out directly with numpy."""
    out = np.empty(n)
    for i in range(n):
        a = x
        for layer in model.hidden:
            w = layer.weight.mu + softplus(layer.weight.rho) * rng.standard_normal(layer.weight.mu.shape)
            b = layer.bias.mu + softplus(layer.bias.rho) * rng.standard_normal(layer.bias.mu.shape)
            a = np.maximum(w @ a + b, 0.0)
        raw_mean, raw_sd = model.head.weight @ a + model.head.bias
        mean = model.target_mean + model.target_scale * raw_mean
        sd = model.target_scale * (softplus(raw_sd) + 1e-6)
        out[i] = rng.normal(mean, sd)
    return out


def test_sampler_matches_independent_implementation(model, rng):
    x = rng.normal(size=9)
    ours = sample_predictions(model, x, n=40_000, rng=np.random.default_rng(5))
    theirs = _independent_samples(model, x, 40_000, np.random.default_rng(6))
    assert ours.mean() == pytest.approx(theirs.mean(), rel=0.02)
    assert ours.std(ddof=1) == pytest.approx(theirs.std(ddof=1), rel=0.02)


def test_more_samples_estimate_the_same_distribution(model, rng):
    x = rng.normal(size=9)
    few = predict_standardized(model, x, n=100, rng=np.random.default_rng(7))[0]
    many = predict_standardized(model, x, n=10_000, rng=np.random.default_rng(7))[0]
    assert abs(few.mu - many.mu) < 3 * few.sigma / np.sqrt(100)


def test_mean_mode_drops_output_noise(model, rng):
    x = rng.normal(size=(3, 9))
    total = predict_standardized(model, x, n=400, rng=np.random.default_rng(9))
    means_only = predict_standardized(model, x, n=400, rng=np.random.default_rng(9), mode='mean')
    for full, partial in zip(total, means_only):
        assert partial.sigma < full.sigma
        assert partial.epistemic_sd == pytest.approx(full.epistemic_sd)
        assert full.aleatoric_sd > 0


def test_unknown_mode_is_rejected(model):
    with pytest.raises(ValueError):
        sample_predictions(model, np.zeros(9), n=5, rng=np.random.default_rng(0), mode='median')


def test_prediction_interval_is_consistent(model, rng):
    prediction = predict_standardized(model, rng.normal(size=9), n=100, rng=rng)[0]
    lower, upper = prediction.ci95
    assert upper - lower == pytest.approx(2 * 1.96 * prediction.sigma, abs=1e-9)
    assert prediction.delta_c == pytest.approx(1.96 * prediction.sigma)
    assert prediction.warning_cycle == lower
    assert prediction.samples.shape == (100,)


def test_prediction_contract_rejects_wrong_interval():
    with pytest.raises(ValidationError):
        EolPrediction(mu=800.0, sigma=10.0, n_samples=2, ci95=(700.0, 900.0), samples=np.array([790.0, 810.0]))


def test_predict_end_to_end_is_seeded(model, small_fleet):
    rows = featurize_fleet(small_fleet, 100)
    standardizer = fit_standardizer(feature_matrix([vector for _, vector in rows]))
    first = predict(model, standardizer, small_fleet[0], 100, n=50, rng=np.random.default_rng(3))
    second = predict(model, standardizer, small_fleet[0], 100, n=50, rng=np.random.default_rng(3))
    assert first.mu == second.mu and first.sigma == second.sigma
    np.testing.assert_array_equal(first.samples, second.samples)
    with pytest.raises(InsufficientDataError):
        predict(model, standardizer, small_fleet[0], 100, n=1, rng=np.random.default_rng(3))


def test_histogram_probabilities(rng):
    histogram = sample_histogram(rng.normal(800, 50, size=100), bins=100)
    assert len(histogram.edges) == 101
    assert sum(histogram.probabilities) == pytest.approx(1.0)
    assert histogram.peak_probability >= 0.01


def test_records_and_jsonl(tmp_path, model, rng):
    prediction = predict_standardized(model, rng.normal(size=9), n=100, rng=rng)[0]
    actual = int(round(prediction.mu))
    record = prediction_record(prediction, 'cell-7', 200, actual_eol=actual, run=3, bins=20)
    assert record.within_ci
    assert record.abs_error == pytest.approx(abs(prediction.mu - actual))
    baseline = point_record(812.5, 'cell-7', 200, 'knn', actual_eol=800)
    assert baseline.sigma is None and baseline.ci95 is None
    assert baseline.abs_error == 12.5

    path = tmp_path / 'predictions.jsonl'
    assert write_jsonl([record, baseline], path) == 2
    lines = path.read_text(encoding='utf-8').splitlines()
    assert json.loads(lines[1])['sigma'] is None
    assert PredictionRecord.model_validate_json(lines[0]) == record

    table = histogram_table([record, baseline])
    assert len(table) == 20
    assert table['probability'].sum() == pytest.approx(1.0)


def test_rows_draw_their_own_weights(model, rng):
    X = rng.normal(size=(3, 9))
    batch = predict_standardized(model, X, n=50, rng=np.random.default_rng(11))
    alone = predict_standardized(model, X[0], n=50, rng=np.random.default_rng(11))[0]
    np.testing.assert_array_equal(batch[0].samples, alone.samples)

    # Swapping a neighbour leaves the other rows untouched.
    changed = X.copy()
    changed[1] = rng.normal(size=9)
    other = predict_standardized(model, changed, n=50, rng=np.random.default_rng(11))
    np.testing.assert_array_equal(other[0].samples, batch[0].samples)
    np.testing.assert_array_equal(other[2].samples, batch[2].samples)


def test_identical_rows_get_independent_draws(model, rng):
    x = rng.normal(size=9)
    first, second = predict_standardized(model, np.stack([x, x]), n=50, rng=np.random.default_rng(12))
    assert not np.array_equal(first.samples, second.samples)
