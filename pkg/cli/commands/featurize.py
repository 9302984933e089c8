# cli/commands/featurize.py
"""`featurize`: the nine-feature table of every cell at one prediction cycle."""
import logging

from cli.commands.common import STDOUT, open_output, positive_int
from core.cellhist_parser import load_cell_histories
from core.features import feature_table, featurize_fleet

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser('featurize', help="Extract features at one prediction cycle as CSV.")
    parser.add_argument('--in', dest='input_path', required=True, help="cellhist-v1 file.")
    parser.add_argument('--cycle', type=positive_int, required=True, help="Prediction cycle c (> 10).")
    parser.add_argument('--out', default=STDOUT, help="Output CSV (default: stdout).")
    parser.add_argument('--skip-failures', action='store_true',
                        help="Skip cells whose features cannot be computed instead of failing.")
    parser.set_defaults(handler=run)


def run(args) -> None:
    histories = load_cell_histories(args.input_path)
    table = feature_table(featurize_fleet(histories, args.cycle, skip_failures=args.skip_failures))
    with open_output(args.out) as handle:
        table.to_csv(handle, index=False, float_format='%.17g')
    logger.info(f"Featurized {len(table)} cells at cycle {args.cycle}.")
