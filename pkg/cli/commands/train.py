# cli/commands/train.py
"""`train`: fits a BNN at one prediction cycle and writes a bnn-model-v1 document."""
import logging

from cli.commands.common import load_train_config, load_usable, non_negative_int, positive_int
from core.bnn.serialization import save_model
from core.bnn.training import train
from core.eol import resolve_eol
from core.features import apply_standardizer, featurize, fit_standardizer

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser('train', help="Train a BNN on every usable cell at one prediction cycle.")
    parser.add_argument('--in', dest='input_path', required=True, help="cellhist-v1 file.")
    parser.add_argument('--cycle', type=positive_int, required=True, help="Prediction cycle c (> 10).")
    parser.add_argument('--seed', type=non_negative_int, required=True)
    parser.add_argument('--model-out', required=True, help="Output model document.")
    parser.add_argument('--config', default=None, help="TrainConfig JSON file.")
    parser.add_argument('--min-eol', type=non_negative_int, default=None)
    parser.set_defaults(handler=run)


def run(args) -> None:
    config = load_train_config(args.config, args.seed)
    histories = load_usable(args.input_path, args.min_eol)
    vectors = [featurize(history, args.cycle) for history in histories]
    labels = [resolve_eol(history) for history in histories]
    standardizer = fit_standardizer(vectors)
    model, history = train(apply_standardizer(standardizer, vectors), labels, config)
    save_model(args.model_out, model, standardizer, config, args.cycle)
    if history.records:
        logger.info(f"Best training MAE {min(history.mae_trace()):.2f} cycles at epoch {history.best_epoch}.")
