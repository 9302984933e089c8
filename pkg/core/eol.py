# core/eol.py
"""
Ground-truth end-of-life: the first cycle whose discharge capacity falls
below a fraction of the nominal capacity, plus fleet filtering on it.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from config import settings
from core.exceptions import UnresolvedEolError
from schemas.cell_schemas import CellHistory

logger = logging.getLogger(__name__)


def first_crossing(capacities: np.ndarray, threshold: float) -> Optional[int]:
    """1-based position of the first value strictly below `threshold`, or None."""
    below = np.flatnonzero(np.asarray(capacities) < threshold)
    return int(below[0]) + 1 if below.size else None


def detect_eol(history: CellHistory, threshold_fraction: float = 0.8) -> Optional[int]:
    """
    Smallest cycle_index whose discharge capacity is below
    threshold_fraction x nominal capacity; None if the record never crosses.
    The first raw crossing counts, even if noise later lifts the capacity again.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError(f"threshold_fraction must lie in (0, 1), got {threshold_fraction}")
    if not history.cycles:
        raise ValueError(f"cell '{history.cell_id}' has no cycles")
    position = first_crossing(history.discharge_capacities(), threshold_fraction * history.nominal_capacity)
    return history.cycles[position - 1].cycle_index if position is not None else None


def resolve_eol(history: CellHistory, threshold_fraction: Optional[float] = None) -> int:
    """The recorded EoL label, falling back to detection; raises if neither exists."""
    if history.eol_cycle is not None:
        return history.eol_cycle
    fraction = settings.eol_threshold_fraction if threshold_fraction is None else threshold_fraction
    eol = detect_eol(history, fraction) if history.cycles else None
    if eol is None:
        raise UnresolvedEolError(
            f"no EoL label and capacity never falls below {fraction:.0%} of nominal",
            cell_id=history.cell_id,
        )
    return eol


def labelled(histories: Sequence[CellHistory], threshold_fraction: Optional[float] = None) -> List[CellHistory]:
    """
    Keeps only histories whose EoL can be resolved, attaching the label.
    Records that end before the threshold is crossed are dropped rather than
    given an extrapolated label.
    """
    kept = []
    for history in histories:
        try:
            eol = resolve_eol(history, threshold_fraction)
        except UnresolvedEolError:
            logger.warning(f"Dropping cell '{history.cell_id}': its record ends before end of life.")
            continue
        kept.append(history if history.eol_cycle == eol else history.model_copy(update={'eol_cycle': eol}))
    return kept


def filter_usable(
    histories: Sequence[CellHistory], min_eol: int = 500, threshold_fraction: Optional[float] = None
) -> List[CellHistory]:
    """Retains, in order, exactly the cells whose EoL is at least `min_eol`."""
    usable = [history for history in histories if resolve_eol(history, threshold_fraction) >= min_eol]
    excluded = len(histories) - len(usable)
    if excluded:
        logger.info(f"Excluded {excluded} of {len(histories)} cells with EoL below {min_eol} cycles.")
    return usable
