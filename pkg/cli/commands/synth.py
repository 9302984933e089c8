# cli/commands/synth.py
"""`synth`: writes a seeded synthetic fleet as a cellhist-v1 file."""
import logging

from cli.commands.common import non_negative_int, positive_int
from config import settings
from core.cellhist_parser import save_cell_histories
from core.synthetic import generate_fleet
from schemas.cell_schemas import SyntheticRanges

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser('synth', help="Generate a synthetic fleet with known EoL.")
    parser.add_argument('--seed', type=non_negative_int, required=True)
    parser.add_argument('--cells', type=positive_int, required=True, help="Number of cells.")
    parser.add_argument('--out', required=True, help="Output cellhist-v1 file.")
    parser.add_argument('--cycles', type=positive_int, default=None,
                        help="Cycles per cell (default: a short tail past each cell's target EoL).")
    parser.add_argument('--eol-range', type=positive_int, nargs=2, metavar=('MIN', 'MAX'), default=None)
    parser.add_argument('--noise-range', type=float, nargs=2, metavar=('MIN', 'MAX'), default=None)
    parser.add_argument('--n-jobs', type=int, default=settings.n_jobs)
    parser.set_defaults(handler=run)


def run(args) -> None:
    overrides = {}
    if args.eol_range is not None:
        overrides['target_eol'] = tuple(args.eol_range)
    if args.noise_range is not None:
        overrides['noise_scale'] = tuple(args.noise_range)
    ranges = SyntheticRanges(**overrides)
    fleet = generate_fleet(args.seed, args.cells, ranges, n_cycles=args.cycles, n_jobs=args.n_jobs)
    save_cell_histories(fleet, args.out)
