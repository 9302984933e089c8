# cli/commands/common.py
"""Argument helpers and loaders shared by the subcommands."""
import argparse
import contextlib
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config import settings
from core.cellhist_parser import load_cell_histories
from core.eol import filter_usable, labelled
from schemas.cell_schemas import CellHistory
from schemas.model_schemas import TrainConfig

logger = logging.getLogger(__name__)

STDOUT = '-'


def comma_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(',') if part.strip()]


def bounded_int(minimum: int):
    """argparse type for integers of at least `minimum`; violations are usage errors."""
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid integer: '{text}'")
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}, got {value}")
        return value
    parse.__name__ = 'int'
    return parse


def fraction(text: str) -> float:
    """argparse type for a ratio strictly between 0 and 1."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: '{text}'")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {value}")
    return value


positive_int = bounded_int(1)
non_negative_int = bounded_int(0)


def load_usable(path: str, min_eol: Optional[int] = None) -> List[CellHistory]:
    """Cells with a resolvable EoL of at least `min_eol` cycles, labels attached."""
    min_eol = settings.min_eol if min_eol is None else min_eol
    usable = filter_usable(labelled(load_cell_histories(path)), min_eol)
    logger.info(f"{len(usable)} usable cells in '{path}'.")
    return usable


def load_train_config(path: Optional[str], seed: Optional[int] = None) -> TrainConfig:
    config = TrainConfig() if path is None else TrainConfig.model_validate_json(Path(path).read_text(encoding='utf-8'))
    return config if seed is None else config.model_copy(update={'seed': seed})


@contextlib.contextmanager
def open_output(path: str):
    """A text handle for `path`, or stdout for '-'."""
    if path == STDOUT:
        yield sys.stdout
        sys.stdout.flush()
    else:
        with Path(path).open('w', encoding='utf-8', newline='') as handle:
            yield handle
