# tests/conftest.py
from typing import List

import numpy as np
import pytest

from core.cellhist_parser import format_cell_histories
from core.synthetic import generate_cell, generate_fleet
from schemas.cell_schemas import CellHistory, CycleRecord, SyntheticCellParams, SyntheticRanges, VoltageCapacityCurve


def history_lines(histories) -> List[str]:
    """Exact text form of histories; equal lines mean bit-identical data."""
    return list(format_cell_histories(histories))


def simple_cycle(index: int, capacity: float = 1.0, resistance: float = 0.02, charge_time: float = 10.0,
                 temperature: float = 30.0, duration: float = 600.0) -> CycleRecord:
    """A hand-made cycle with a two-segment linear discharge curve ending at `capacity`."""
    return CycleRecord(
        cycle_index=index,
        discharge_capacity=capacity,
        charge_time=charge_time,
        internal_resistance=resistance,
        temperature_time=[0.0, duration],
        temperature=[temperature, temperature],
        discharge_curve=VoltageCapacityCurve(voltage=[3.5, 3.0, 2.5], capacity=[0.0, capacity / 2, capacity]),
    )


def simple_history(capacities, cell_id: str = 'cell-a', nominal: float = 1.1, eol_cycle=None) -> CellHistory:
    cycles = tuple(simple_cycle(i + 1, capacity=q) for i, q in enumerate(capacities))
    return CellHistory(cell_id=cell_id, nominal_capacity=nominal, cycles=cycles, eol_cycle=eol_cycle)


@pytest.fixture
def noise_free_params() -> SyntheticCellParams:
    return SyntheticCellParams(target_eol=1000)


@pytest.fixture(scope='session')
def noise_free_cell() -> CellHistory:
    """A noise-free cell with EoL 1000, recorded for 450 cycles."""
    return generate_cell(7, SyntheticCellParams(target_eol=1000), 450, cell_id='clean')


@pytest.fixture(scope='session')
def small_fleet() -> List[CellHistory]:
    """Twelve short-lived noisy cells; EoL between 520 and 700 keeps generation fast."""
    ranges = SyntheticRanges(target_eol=(520, 700))
    return generate_fleet(11, 12, ranges)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
