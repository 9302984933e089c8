# cli/commands/predict.py
"""
`predict`: EoL distributions of one or more cells, written as JSON lines with
an optional long-format histogram CSV for density plots. Several model files
(one per prediction cycle) give the case-study view of a cell over time.
"""
import logging

import numpy as np

from cli.commands.common import (
    STDOUT, bounded_int, comma_list, non_negative_int, open_output, positive_int,
)
from config import settings
from core.bnn.serialization import load_model
from core.cellhist_parser import load_cell_histories
from core.eol import resolve_eol
from core.exceptions import UnresolvedEolError
from core.predictor import histogram_table, predict, prediction_record

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser('predict', help="Predict EoL with 95%% intervals for selected cells.")
    parser.add_argument('--model', nargs='+', required=True, help="One or more bnn-model-v1 files.")
    parser.add_argument('--in', dest='input_path', required=True, help="cellhist-v1 file.")
    parser.add_argument('--cell', type=comma_list, default=None,
                        help="Comma-separated cell ids (default: every cell).")
    parser.add_argument('--cycle', type=positive_int, nargs='+', default=None,
                        help="Prediction cycles (default: each model's own training cycle).")
    parser.add_argument('--samples', type=bounded_int(2), default=settings.n_prediction_samples)
    parser.add_argument('--seed', type=non_negative_int, required=True)
    parser.add_argument('--mode', choices=('total', 'mean'), default='total',
                        help="'mean' drops the output-noise draw (weight uncertainty only).")
    parser.add_argument('--bins', type=positive_int, default=settings.histogram_bins)
    parser.add_argument('--out', default=STDOUT, help="Output JSON-lines file (default: stdout).")
    parser.add_argument('--out-histogram', default=None, help="Per-bin probability CSV.")
    parser.set_defaults(handler=run)


def _actual_eol(history):
    try:
        return resolve_eol(history)
    except UnresolvedEolError:
        return None


def run(args) -> None:
    histories = load_cell_histories(args.input_path)
    if args.cell:
        by_id = {history.cell_id: history for history in histories}
        unknown = [cell_id for cell_id in args.cell if cell_id not in by_id]
        if unknown:
            raise ValueError(f"unknown cell ids: {', '.join(unknown)}")
        histories = [by_id[cell_id] for cell_id in args.cell]

    rng = np.random.default_rng(args.seed)
    records = []
    for model_path in args.model:
        model, document = load_model(model_path)
        cycles = args.cycle or [document.prediction_cycle]
        for c in cycles:
            if c != document.prediction_cycle:
                logger.warning(f"Model '{model_path}' was trained at cycle {document.prediction_cycle}, "
                               f"but is applied at cycle {c}.")
            for history in histories:
                prediction = predict(model, document.standardizer, history, c, args.samples, rng, args.mode)
                records.append(prediction_record(
                    prediction, history.cell_id, c, actual_eol=_actual_eol(history), bins=args.bins,
                ))

    with open_output(args.out) as handle:
        for record in records:
            handle.write(record.model_dump_json())
            handle.write("\n")
    if args.out_histogram is not None:
        histogram_table(records).to_csv(args.out_histogram, index=False, float_format='%.17g')
        logger.info(f"Wrote sample histograms to '{args.out_histogram}'.")
    logger.info(f"Wrote {len(records)} predictions.")
