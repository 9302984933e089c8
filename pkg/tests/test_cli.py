# tests/test_cli.py
import json

import pandas as pd
import pytest

import cli.commands.train as train_command
from cli.app import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, run_cli
from core.cellhist_parser import load_cell_histories
from core.exceptions import NumericalFailure
from schemas.model_schemas import PredictionRecord


@pytest.fixture(scope='module')
def fleet_file(tmp_path_factory):
    path = tmp_path_factory.mktemp('fleet') / 'fleet.txt'
    code = run_cli(['synth', '--seed', '1', '--cells', '5', '--out', str(path), '--eol-range', '520', '600'])
    assert code == EXIT_OK
    return path


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps({'max_epochs': 5, 'hidden_dims': [4]}), encoding='utf-8')
    return path


def test_synth_writes_a_loadable_fleet(fleet_file):
    histories = load_cell_histories(fleet_file)
    assert [h.cell_id for h in histories] == [f'synth-{i:04d}' for i in range(5)]
    assert all(h.eol_cycle is not None for h in histories)


def test_synth_is_reproducible(tmp_path, fleet_file):
    again = tmp_path / 'again.txt'
    assert run_cli(['synth', '--seed', '1', '--cells', '5', '--out', str(again), '--eol-range', '520', '600']) == EXIT_OK
    assert again.read_text(encoding='utf-8') == fleet_file.read_text(encoding='utf-8')


def test_featurize_writes_one_row_per_cell(tmp_path, fleet_file):
    out = tmp_path / 'features.csv'
    assert run_cli(['featurize', '--in', str(fleet_file), '--cycle', '100', '--out', str(out)]) == EXIT_OK
    table = pd.read_csv(out)
    assert table.shape == (5, 12)
    assert set(table['prediction_cycle']) == {100}


def test_featurize_to_stdout(capsys, fleet_file):
    assert run_cli(['featurize', '--in', str(fleet_file), '--cycle', '50']) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith('cell_id,prediction_cycle,eol_cycle')
    assert len(lines) == 6


def test_featurize_rejects_early_cycle(capsys, fleet_file):
    assert run_cli(['featurize', '--in', str(fleet_file), '--cycle', '10']) == EXIT_DATA
    assert capsys.readouterr().err.startswith('error:')


def test_help_exits_cleanly(capsys):
    assert run_cli(['--help']) == EXIT_OK
    assert '95%' in capsys.readouterr().out


@pytest.mark.parametrize('command', ['synth', 'featurize', 'train', 'predict', 'evaluate'])
def test_subcommand_help_exits_cleanly(command, capsys):
    assert run_cli([command, '--help']) == EXIT_OK
    assert capsys.readouterr().out.startswith('usage:')


@pytest.mark.parametrize('argv', [
    [],
    ['fit'],
    ['featurize', '--in', 'x.txt'],
    ['featurize', '--in', 'x.txt', '--cycle', 'many'],
    ['synth', '--seed', '1', '--cells', '2', '--out', 'x.txt', '--unknown'],
    ['synth', '--seed', '1', '--cells', '0', '--out', 'x.txt'],
    ['synth', '--seed', '-1', '--cells', '2', '--out', 'x.txt'],
    ['evaluate', '--in', 'x.txt', '--seed', '0', '--runs', '0'],
    ['evaluate', '--in', 'x.txt', '--seed', '0', '--train-frac', '1.5'],
    ['predict', '--model', 'm.json', '--in', 'x.txt', '--seed', '0', '--samples', '1'],
])
def test_usage_errors(argv, capsys):
    assert run_cli(argv) == EXIT_USAGE
    assert 'error:' in capsys.readouterr().err


def test_missing_input_is_a_data_error(tmp_path, capsys):
    assert run_cli(['featurize', '--in', str(tmp_path / 'absent.txt'), '--cycle', '100']) == EXIT_DATA
    assert capsys.readouterr().err.startswith("error:")


def test_malformed_input_is_a_data_error(tmp_path):
    path = tmp_path / 'bad.txt'
    path.write_text("not a cellhist file\n", encoding='utf-8')
    assert run_cli(['featurize', '--in', str(path), '--cycle', '100']) == EXIT_DATA


def test_numerical_failure_exit_code(monkeypatch, tmp_path, fleet_file):
    def failing(*args, **kwargs):
        raise NumericalFailure("non-finite loss", epoch=3)

    monkeypatch.setattr(train_command, 'train', failing)
    argv = ['train', '--in', str(fleet_file), '--cycle', '100', '--seed', '0',
            '--model-out', str(tmp_path / 'model.json'), '--min-eol', '0']
    assert run_cli(argv) == EXIT_NUMERICAL


def test_train_then_predict(tmp_path, fleet_file, small_config):
    model_path = tmp_path / 'model.json'
    argv = ['train', '--in', str(fleet_file), '--cycle', '100', '--seed', '3', '--model-out', str(model_path),
            '--config', str(small_config), '--min-eol', '0']
    assert run_cli(argv) == EXIT_OK
    assert json.loads(model_path.read_text(encoding='utf-8'))['prediction_cycle'] == 100

    out, histogram = tmp_path / 'predictions.jsonl', tmp_path / 'histogram.csv'
    argv = ['predict', '--model', str(model_path), '--in', str(fleet_file), '--cell', 'synth-0001,synth-0003',
            '--seed', '0', '--samples', '50', '--bins', '10', '--out', str(out), '--out-histogram', str(histogram)]
    assert run_cli(argv) == EXIT_OK
    records = [PredictionRecord.model_validate_json(line) for line in out.read_text(encoding='utf-8').splitlines()]
    assert [r.cell_id for r in records] == ['synth-0001', 'synth-0003']
    assert all(r.n_samples == 50 and r.prediction_cycle == 100 and r.actual_eol is not None for r in records)
    assert len(pd.read_csv(histogram)) == 20

    first = out.read_text(encoding='utf-8')
    assert run_cli(argv) == EXIT_OK
    assert out.read_text(encoding='utf-8') == first


def test_predict_rejects_unknown_cell(tmp_path, fleet_file, small_config):
    model_path = tmp_path / 'model.json'
    run_cli(['train', '--in', str(fleet_file), '--cycle', '60', '--seed', '3', '--model-out', str(model_path),
             '--config', str(small_config), '--min-eol', '0'])
    argv = ['predict', '--model', str(model_path), '--in', str(fleet_file), '--cell', 'nope', '--seed', '0']
    assert run_cli(argv) == EXIT_DATA


def test_evaluate_writes_reports(tmp_path, fleet_file, small_config):
    table, report, predictions = tmp_path / 'table.csv', tmp_path / 'report.json', tmp_path / 'runs.jsonl'
    argv = ['evaluate', '--in', str(fleet_file), '--runs', '2', '--seed', '4', '--models', 'bnn,knn,svr',
            '--cycles', '100', '200', '--config', str(small_config), '--min-eol', '0',
            '--out-table', str(table), '--out-json', str(report), '--out-predictions', str(predictions)]
    assert run_cli(argv) == EXIT_OK

    frame = pd.read_csv(table)
    assert list(frame['prediction_cycle']) == [100, 200]
    assert 'bnn_coverage_test' in frame.columns and 'knn_mae_test' in frame.columns
    document = json.loads(report.read_text(encoding='utf-8'))
    assert document['not_implemented'] == ['svr']
    assert document['n_runs'] == 2
    assert len(predictions.read_text(encoding='utf-8').splitlines()) > 0


def test_evaluate_needs_an_implemented_model(fleet_file):
    assert run_cli(['evaluate', '--in', str(fleet_file), '--seed', '0', '--models', 'svr']) == EXIT_DATA
