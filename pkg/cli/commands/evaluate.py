# cli/commands/evaluate.py
"""`evaluate`: the repeated-split experiment with its table and JSON report."""
import logging

from cli.commands.common import (
    comma_list, fraction, load_train_config, load_usable, non_negative_int, positive_int,
)
from config import settings
from core.evaluation import run_experiment, write_report
from core.models.factory import parse_model_names
from core.predictor import write_jsonl

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser('evaluate', help="Run the multi-run experiment and write the report.")
    parser.add_argument('--in', dest='input_path', required=True, help="cellhist-v1 file.")
    parser.add_argument('--runs', type=positive_int, default=settings.n_runs)
    parser.add_argument('--seed', type=non_negative_int, required=True)
    parser.add_argument('--models', type=comma_list, default=['bnn', 'nn', 'knn', 'en'],
                        help="Comma-separated subset of bnn,nn,knn,en.")
    parser.add_argument('--cycles', type=positive_int, nargs='+', default=None)
    parser.add_argument('--train-frac', type=fraction, default=None)
    parser.add_argument('--config', default=None, help="TrainConfig JSON file for the network models.")
    parser.add_argument('--min-eol', type=non_negative_int, default=None)
    parser.add_argument('--n-jobs', type=int, default=None)
    parser.add_argument('--out-table', default=None, help="Table CSV (rows = prediction cycles).")
    parser.add_argument('--out-json', default=None, help="Full JSON report.")
    parser.add_argument('--out-predictions', default=None, help="Per-run test predictions as JSON lines.")
    parser.set_defaults(handler=run)


def run(args) -> None:
    models, missing = parse_model_names(args.models)
    if not models:
        raise ValueError("no implemented model was requested")
    config = load_train_config(args.config) if args.config else None
    histories = load_usable(args.input_path, args.min_eol)
    sink = [] if args.out_predictions else None
    report = run_experiment(
        histories, models, cycles=args.cycles, n_runs=args.runs, train_frac=args.train_frac,
        base_seed=args.seed, config=config, n_jobs=args.n_jobs, not_implemented=missing, prediction_sink=sink,
    )
    write_report(report, args.out_table, args.out_json)
    if sink is not None:
        write_jsonl(sink, args.out_predictions)
    for summary in report.summaries:
        sigma = f"{summary.test_sigma:.1f}" if summary.test_sigma is not None else "n/a"
        logger.info(
            f"{summary.model} @ {summary.prediction_cycle}: test MAE {summary.test_mae:.1f}, "
            f"MAPE {summary.test_mape:.1f}%, sigma {sigma}"
        )
