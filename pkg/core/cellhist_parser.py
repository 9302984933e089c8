# core/cellhist_parser.py
"""
This module reads and writes the line-oriented "cellhist-v1" interchange
format and turns it into validated CellHistory models that the rest of the
application can use.

    cellhist-v1
    CELL <id> <nominal_capacity_Ah>
    CYC <index> <Qd_Ah> <charge_time_min> <R_ohm>
    T <t0>:<temp0> <t1>:<temp1> ...
    V <v0>:<q0> <v1>:<q1> ...
    ...
    EOL <cycle>            (optional, once per cell, after its cycles)

Numbers are written with repr(), the shortest text that round-trips a
float exactly, so save followed by load is bit-identical.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from core.exceptions import InvariantViolation, MalformedRecordError
from schemas.cell_schemas import CellHistory, CycleRecord, VoltageCapacityCurve

logger = logging.getLogger(__name__)

FORMAT_HEADER = "cellhist-v1"
CONTIGUITY = "cycle indices contiguous from 1"


def _invariant_name(error: ValidationError) -> str:
    """Extracts the invariant text a schema validator raised."""
    first = error.errors()[0]
    original = first.get('ctx', {}).get('error')
    return str(original) if original is not None else first.get('msg', str(error))


def _parse_pairs(tokens: List[str], line_number: int, kind: str) -> Tuple[np.ndarray, np.ndarray]:
    """Parses `a:b` tokens into two float arrays."""
    if any(token.count(':') != 1 for token in tokens):
        raise MalformedRecordError(f"{kind} line expects <x>:<y> pairs", line_number=line_number)
    try:
        flat = np.array([part for token in tokens for part in token.split(':')], dtype=np.float64)
    except ValueError as e:
        raise MalformedRecordError(f"{kind} line has a non-numeric value: {e}", line_number=line_number)
    pairs = flat.reshape(-1, 2) if flat.size else np.empty((0, 2))
    return pairs[:, 0].copy(), pairs[:, 1].copy()


def _parse_number(text: str, kind: type, line_number: int, what: str):
    try:
        return kind(text)
    except ValueError:
        raise MalformedRecordError(f"{what} is not a valid {kind.__name__}: '{text}'", line_number=line_number)


class _CellBuilder:
    """Accumulates one cell's lines and validates it when the cell ends."""

    def __init__(self, cell_id: str, nominal_capacity: float, line_number: int):
        self.cell_id = cell_id
        self.nominal_capacity = nominal_capacity
        self.line_number = line_number
        self.cycles: List[CycleRecord] = []
        self.pending: Optional[dict] = None
        self.eol_cycle: Optional[int] = None

    def add_cycle_header(self, index: int, qd: float, charge_time: float, resistance: float, line_number: int):
        self._require_no_pending(line_number)
        if self.eol_cycle is not None:
            raise MalformedRecordError("CYC after EOL", line_number=line_number, cell_id=self.cell_id)
        expected = len(self.cycles) + 1
        if index != expected:
            raise InvariantViolation(
                CONTIGUITY, cell_id=self.cell_id, cycle_index=index, line_number=line_number
            )
        self.pending = {
            'cycle_index': index, 'discharge_capacity': qd, 'charge_time': charge_time,
            'internal_resistance': resistance, 'line_number': line_number,
        }

    def add_temperature(self, times: np.ndarray, values: np.ndarray, line_number: int):
        if self.pending is None or 'temperature' in self.pending:
            raise MalformedRecordError("T line must follow a CYC line", line_number=line_number, cell_id=self.cell_id)
        self.pending['temperature_time'] = times
        self.pending['temperature'] = values

    def add_curve(self, voltage: np.ndarray, capacity: np.ndarray, line_number: int):
        if self.pending is None or 'temperature' not in self.pending:
            raise MalformedRecordError("V line must follow a T line", line_number=line_number, cell_id=self.cell_id)
        pending, self.pending = self.pending, None
        cycle_index = pending.pop('cycle_index')
        pending.pop('line_number')
        try:
            curve = VoltageCapacityCurve(voltage=voltage, capacity=capacity)
            record = CycleRecord(cycle_index=cycle_index, discharge_curve=curve, **pending)
        except ValidationError as e:
            raise InvariantViolation(
                _invariant_name(e), cell_id=self.cell_id, cycle_index=cycle_index, line_number=line_number
            )
        self.cycles.append(record)

    def set_eol(self, eol_cycle: int, line_number: int):
        self._require_no_pending(line_number)
        if self.eol_cycle is not None:
            raise MalformedRecordError("EOL given twice", line_number=line_number, cell_id=self.cell_id)
        self.eol_cycle = eol_cycle

    def build(self, line_number: int) -> CellHistory:
        self._require_no_pending(line_number)
        try:
            return CellHistory(
                cell_id=self.cell_id, nominal_capacity=self.nominal_capacity,
                cycles=tuple(self.cycles), eol_cycle=self.eol_cycle,
            )
        except ValidationError as e:
            raise InvariantViolation(_invariant_name(e), cell_id=self.cell_id, line_number=self.line_number)

    def _require_no_pending(self, line_number: int):
        if self.pending is not None:
            raise MalformedRecordError(
                f"cycle {self.pending['cycle_index']} is missing its T/V lines",
                line_number=line_number, cell_id=self.cell_id,
            )


def parse_cell_histories(lines: Iterable[str], max_cells: Optional[int] = None) -> List[CellHistory]:
    """
    Parses cellhist-v1 text into validated histories, in file order.
    Stops early once `max_cells` cells have been read.
    """
    if max_cells is not None and max_cells < 1:
        raise ValueError("max_cells must be at least 1")
    histories: List[CellHistory] = []
    builder: Optional[_CellBuilder] = None
    line_number = 0
    seen_header = False

    for line_number, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if not seen_header:
            if tokens != [FORMAT_HEADER]:
                raise MalformedRecordError(f"expected header '{FORMAT_HEADER}'", line_number=line_number)
            seen_header = True
            continue

        tag, rest = tokens[0], tokens[1:]
        if tag == 'CELL':
            if builder is not None:
                histories.append(builder.build(line_number))
                if max_cells is not None and len(histories) >= max_cells:
                    builder = None
                    break
            if len(rest) != 2:
                raise MalformedRecordError("CELL line expects <id> <nominal_capacity>", line_number=line_number)
            builder = _CellBuilder(rest[0], _parse_number(rest[1], float, line_number, "nominal capacity"), line_number)
        elif builder is None:
            raise MalformedRecordError(f"'{tag}' line before any CELL line", line_number=line_number)
        elif tag == 'CYC':
            if len(rest) != 4:
                raise MalformedRecordError("CYC line expects <index> <Qd> <charge_time> <R>", line_number=line_number)
            builder.add_cycle_header(
                _parse_number(rest[0], int, line_number, "cycle index"),
                _parse_number(rest[1], float, line_number, "discharge capacity"),
                _parse_number(rest[2], float, line_number, "charge time"),
                _parse_number(rest[3], float, line_number, "internal resistance"),
                line_number,
            )
        elif tag == 'T':
            builder.add_temperature(*_parse_pairs(rest, line_number, 'T'), line_number)
        elif tag == 'V':
            builder.add_curve(*_parse_pairs(rest, line_number, 'V'), line_number)
        elif tag == 'EOL':
            if len(rest) != 1:
                raise MalformedRecordError("EOL line expects <cycle>", line_number=line_number)
            builder.set_eol(_parse_number(rest[0], int, line_number, "EoL cycle"), line_number)
        else:
            raise MalformedRecordError(f"unknown record tag '{tag}'", line_number=line_number)

    if not seen_header:
        raise MalformedRecordError(f"missing '{FORMAT_HEADER}' header", line_number=max(line_number, 1))
    if builder is not None:
        histories.append(builder.build(line_number))
    return histories


def load_cell_histories(path: Union[str, Path], max_cells: Optional[int] = None) -> List[CellHistory]:
    """Loads every cell of a cellhist-v1 file (or the first `max_cells`)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"cellhist file not found: {path}")
    logger.info(f"Loading cell histories from '{path}'.")
    with path.open('r', encoding='utf-8') as handle:
        histories = parse_cell_histories(handle, max_cells=max_cells)
    logger.info(f"Loaded {len(histories)} cell histories from '{path}'.")
    return histories


def _format_pairs(tag: str, xs: np.ndarray, ys: np.ndarray) -> str:
    return " ".join([tag] + [f"{x!r}:{y!r}" for x, y in zip(xs.tolist(), ys.tolist())])


def format_cell_histories(histories: Iterable[CellHistory]) -> Iterable[str]:
    """Yields the cellhist-v1 lines (without newlines) for `histories`."""
    yield FORMAT_HEADER
    for history in histories:
        yield f"CELL {history.cell_id} {history.nominal_capacity!r}"
        for record in history.cycles:
            yield (
                f"CYC {record.cycle_index} {record.discharge_capacity!r} "
                f"{record.charge_time!r} {record.internal_resistance!r}"
            )
            yield _format_pairs('T', record.temperature_time, record.temperature)
            yield _format_pairs('V', record.discharge_curve.voltage, record.discharge_curve.capacity)
        if history.eol_cycle is not None:
            yield f"EOL {history.eol_cycle}"


def save_cell_histories(histories: Iterable[CellHistory], path: Union[str, Path]) -> None:
    """Writes `histories` as a cellhist-v1 file."""
    path = Path(path)
    count = 0
    with path.open('w', encoding='utf-8') as handle:
        for line in format_cell_histories(histories):
            handle.write(line)
            handle.write("\n")
            count += line.startswith("CELL ")
    logger.info(f"Wrote {count} cell histories to '{path}'.")
