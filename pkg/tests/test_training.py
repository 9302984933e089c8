# tests/test_training.py
import numpy as np
import pytest

import core.bnn.training as training
from core.baselines.point_nn import train_point_nn
from core.bnn.training import seed_streams, train, training_mae
from core.bnn.variational import initialize_bnn
from core.exceptions import InsufficientDataError, NumericalFailure
from core.features import apply_standardizer, featurize, fit_standardizer
from core.synthetic import generate_fleet
from schemas.cell_schemas import SyntheticRanges
from schemas.model_schemas import TrainConfig


def linear_data(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 9))
    beta = rng.normal(size=9)
    return X, 800.0 + 60.0 * (X @ beta)


def test_never_improving_mae_produces_schedule_trace(monkeypatch):
    monkeypatch.setattr(training, 'training_mae', lambda network, X, y: 100.0)
    X, y = linear_data(8)
    _, history = train(X, y, TrainConfig(hidden_dims=[4], seed=3))

    lrs = history.lr_trace()
    assert len(lrs) == 91
    assert history.stopped_early
    assert history.best_epoch == 1
    assert lrs[:11] == [0.05] * 11
    assert lrs[11:21] == [0.025] * 10
    assert lrs[61:] == [0.001] * 30
    assert min(lrs) == 0.001


def test_zero_epochs_returns_initial_model():
    X, y = linear_data(6)
    config = TrainConfig(max_epochs=0, hidden_dims=[5], seed=11)
    model, history = train(X, y, config)
    assert history.records == []
    assert history.best_epoch is None
    init_rng, _, _ = seed_streams(11)
    expected = initialize_bnn(9, [5], init_rng, target_mean=float(np.mean(y)), target_scale=float(np.std(y, ddof=1)))
    for name, value in expected.parameters().items():
        np.testing.assert_array_equal(model.parameters()[name], value)


def test_training_reduces_mae():
    X, y = linear_data(60, seed=1)
    config = TrainConfig(max_epochs=200, seed=0)
    initial, _ = train(X, y, config.model_copy(update={'max_epochs': 0}))
    trained, history = train(X, y, config)
    assert training_mae(trained, X, y) < 0.5 * training_mae(initial, X, y)
    assert training_mae(trained, X, y) == min(history.mae_trace())


def test_training_reduces_mae_on_noise_free_cells():
    ranges = SyntheticRanges(target_eol=(520, 700), noise_scale=(0.0, 0.0))
    fleet = generate_fleet(5, 60, ranges)
    vectors = [featurize(history, 100) for history in fleet]
    X = apply_standardizer(fit_standardizer(vectors), vectors)
    y = np.array([history.eol_cycle for history in fleet], dtype=float)

    config = TrainConfig(max_epochs=200, seed=0)
    initial, _ = train(X, y, config.model_copy(update={'max_epochs': 0}))
    trained, _ = train(X, y, config)
    assert training_mae(trained, X, y) <= 0.5 * training_mae(initial, X, y)


def test_lr_trace_bounds():
    X, y = linear_data(20, seed=2)
    _, history = train(X, y, TrainConfig(max_epochs=120, hidden_dims=[8], seed=4))
    lrs = history.lr_trace()
    assert lrs[0] == 0.05
    assert min(lrs) >= 0.001
    assert all(later <= earlier for earlier, later in zip(lrs, lrs[1:]))


def test_same_seed_same_run():
    X, y = linear_data(12, seed=3)
    config = TrainConfig(max_epochs=15, hidden_dims=[6], seed=9)
    first, first_history = train(X, y, config)
    second, second_history = train(X, y, config)
    assert first_history.loss_trace() == second_history.loss_trace()
    for name, value in first.parameters().items():
        np.testing.assert_array_equal(second.parameters()[name], value)


def test_flipout_training_runs():
    X, y = linear_data(12, seed=5)
    _, history = train(X, y, TrainConfig(max_epochs=5, hidden_dims=[6], estimator='flipout', batch_size=4))
    assert len(history.records) == 5
    assert all(np.isfinite(history.loss_trace()))


def test_collapsed_bnn_matches_point_network():
    X, y = linear_data(20, seed=6)
    config = TrainConfig(
        max_epochs=12, hidden_dims=[8, 8], seed=21, init_rho=-40.0, train_rho=False, kl_weight_mode='none',
    )
    _, bnn_history = train(X, y, config)
    _, nn_history = train_point_nn(X, y, config, loss='gaussian_nll')
    np.testing.assert_allclose(bnn_history.loss_trace(), nn_history.loss_trace(), rtol=0, atol=1e-9)
    np.testing.assert_allclose(bnn_history.mae_trace(), nn_history.mae_trace(), rtol=1e-9)


def test_non_finite_mae_reports_epoch(monkeypatch):
    monkeypatch.setattr(training, 'training_mae', lambda network, X, y: float('nan'))
    X, y = linear_data(6)
    with pytest.raises(NumericalFailure) as excinfo:
        train(X, y, TrainConfig(hidden_dims=[4]))
    assert excinfo.value.epoch == 1


def test_training_set_validation():
    with pytest.raises(InsufficientDataError):
        train(np.zeros((1, 9)), [800.0])
    with pytest.raises(ValueError):
        train(np.zeros((3, 9)), [800.0, 900.0])
    with pytest.raises(ValueError):
        train(np.full((3, 9), np.nan), [800.0, 900.0, 1000.0])


def test_config_rejects_floor_above_initial_rate():
    with pytest.raises(ValueError):
        TrainConfig(initial_lr=0.001, lr_floor=0.01)
