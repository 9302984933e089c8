# schemas/cell_schemas.py
"""
Defines the Pydantic data models (Data Contracts) for cycling telemetry and
for the synthetic degradation generator.

Validators raise ValueError with the invariant's name as the message, so the
parser can report exactly which invariant a record broke.
"""
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# --- Invariant names (used verbatim in error reports) ---
CURVE_LENGTHS = "lengths equal and >= 2"
CURVE_FINITE = "curve values finite"
VOLTAGE_MONOTONIC = "voltage strictly monotonic"
CAPACITY_MONOTONIC = "capacity non-decreasing as voltage descends"
CAPACITY_NON_NEGATIVE = "capacity non-negative"
POSITIVE_CAPACITY = "discharge_capacity > 0"
POSITIVE_RESISTANCE = "internal_resistance > 0"
POSITIVE_CHARGE_TIME = "charge_time > 0"
CAPACITY_MATCHES_CURVE = "discharge_capacity equals curve maximum"
TEMPERATURE_SHAPE = "temperature times and values aligned"
TEMPERATURE_FINITE = "temperature values finite"
TIME_INCREASING = "temperature time strictly increasing"
CYCLE_ORDER = "cycle indices strictly increasing from 1"
EOL_WITHIN_RECORD = "eol_cycle <= last cycle_index"
CELL_ID_TOKEN = "cell_id non-empty without whitespace"

CAPACITY_MATCH_RTOL = 1e-6


def _frozen_array(value) -> np.ndarray:
    """Coerces to a read-only float64 vector, reusing already-frozen arrays."""
    if isinstance(value, np.ndarray) and value.dtype == np.float64 and not value.flags.writeable:
        array = value
    else:
        array = np.array(value, dtype=np.float64)
        array.setflags(write=False)
    if array.ndim != 1:
        raise ValueError("expected a one-dimensional array")
    return array


class VoltageCapacityCurve(BaseModel):
    """Discharge capacity as a function of voltage, Q(V), voltage descending."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    voltage: np.ndarray
    capacity: np.ndarray

    @field_validator('voltage', 'capacity', mode='before')
    @classmethod
    def _coerce_arrays(cls, value) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode='after')
    def _check_invariants(self) -> 'VoltageCapacityCurve':
        if self.voltage.shape != self.capacity.shape or self.voltage.size < 2:
            raise ValueError(CURVE_LENGTHS)
        if not (np.all(np.isfinite(self.voltage)) and np.all(np.isfinite(self.capacity))):
            raise ValueError(CURVE_FINITE)
        if np.any(np.diff(self.voltage) >= 0):
            raise ValueError(VOLTAGE_MONOTONIC)
        if np.any(self.capacity < 0):
            raise ValueError(CAPACITY_NON_NEGATIVE)
        if np.any(np.diff(self.capacity) < 0):
            raise ValueError(CAPACITY_MONOTONIC)
        return self

    @property
    def voltage_span(self) -> Tuple[float, float]:
        return float(self.voltage[-1]), float(self.voltage[0])


class CycleRecord(BaseModel):
    """Telemetry summary of one charge/discharge cycle."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cycle_index: int = Field(..., gt=0)
    discharge_capacity: float      # Ah
    charge_time: float             # minutes
    internal_resistance: float     # ohms
    temperature_time: np.ndarray   # seconds
    temperature: np.ndarray        # degrees C
    discharge_curve: VoltageCapacityCurve

    @field_validator('temperature_time', 'temperature', mode='before')
    @classmethod
    def _coerce_arrays(cls, value) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode='after')
    def _check_invariants(self) -> 'CycleRecord':
        if not self.discharge_capacity > 0:
            raise ValueError(POSITIVE_CAPACITY)
        if not self.internal_resistance > 0:
            raise ValueError(POSITIVE_RESISTANCE)
        if not self.charge_time > 0:
            raise ValueError(POSITIVE_CHARGE_TIME)
        if self.temperature_time.shape != self.temperature.shape:
            raise ValueError(TEMPERATURE_SHAPE)
        if not (np.all(np.isfinite(self.temperature_time)) and np.all(np.isfinite(self.temperature))):
            raise ValueError(TEMPERATURE_FINITE)
        if np.any(np.diff(self.temperature_time) <= 0):
            raise ValueError(TIME_INCREASING)
        curve_max = float(np.max(self.discharge_curve.capacity))
        if not math.isclose(self.discharge_capacity, curve_max, rel_tol=CAPACITY_MATCH_RTOL):
            raise ValueError(CAPACITY_MATCHES_CURVE)
        return self

    @property
    def temperature_series(self) -> List[Tuple[float, float]]:
        return list(zip(self.temperature_time.tolist(), self.temperature.tolist()))


class CellHistory(BaseModel):
    """Ordered per-cycle telemetry of one cell, with an optional ground-truth EoL."""
    model_config = ConfigDict(frozen=True)

    cell_id: str
    nominal_capacity: float = Field(..., gt=0)
    cycles: Tuple[CycleRecord, ...] = ()
    eol_cycle: Optional[int] = Field(default=None, gt=0)

    @field_validator('cell_id')
    @classmethod
    def _check_cell_id(cls, value: str) -> str:
        if not value or any(ch.isspace() for ch in value):
            raise ValueError(CELL_ID_TOKEN)
        return value

    @model_validator(mode='after')
    def _check_invariants(self) -> 'CellHistory':
        previous = 0
        for record in self.cycles:
            if record.cycle_index <= previous:
                raise ValueError(CYCLE_ORDER)
            previous = record.cycle_index
        if self.cycles and self.cycles[0].cycle_index != 1:
            raise ValueError(CYCLE_ORDER)
        if self.eol_cycle is not None and (not self.cycles or self.eol_cycle > self.last_cycle):
            raise ValueError(EOL_WITHIN_RECORD)
        return self

    @property
    def last_cycle(self) -> int:
        return self.cycles[-1].cycle_index if self.cycles else 0

    def has_cycle(self, index: int) -> bool:
        return self._position(index) is not None

    def cycle(self, index: int) -> CycleRecord:
        position = self._position(index)
        if position is None:
            # Imported lazily: core depends on schemas, not the other way round.
            from core.exceptions import MissingCycleError
            raise MissingCycleError(f"cycle {index} not recorded", cell_id=self.cell_id, cycle_index=index)
        return self.cycles[position]

    def _position(self, index: int) -> Optional[int]:
        # Contiguous histories resolve in O(1); otherwise fall back to a scan.
        if 1 <= index <= len(self.cycles) and self.cycles[index - 1].cycle_index == index:
            return index - 1
        for position, record in enumerate(self.cycles):
            if record.cycle_index == index:
                return position
        return None

    def discharge_capacities(self) -> np.ndarray:
        return np.array([record.discharge_capacity for record in self.cycles], dtype=np.float64)

    def truncated(self, last_cycle: int) -> 'CellHistory':
        """The history as it looked at `last_cycle`; the EoL label is dropped if it lies later."""
        kept = tuple(record for record in self.cycles if record.cycle_index <= last_cycle)
        eol = self.eol_cycle if self.eol_cycle is not None and self.eol_cycle <= last_cycle else None
        return CellHistory(
            cell_id=self.cell_id, nominal_capacity=self.nominal_capacity, cycles=kept, eol_cycle=eol
        )


class SyntheticCellParams(BaseModel):
    """Shape parameters of one synthetic degradation history."""
    model_config = ConfigDict(frozen=True)

    nominal_capacity: float = Field(default=1.1, gt=0)       # Ah
    target_eol: int = Field(..., ge=2)                        # cycles
    linear_fade_rate: float = Field(default=2e-5, gt=0)      # Ah/cycle
    knee_sharpness: float = Field(default=10.0, gt=0)
    knee_position: float = Field(default=0.75, gt=0, lt=1)
    base_resistance: float = Field(default=0.016, gt=0)      # ohms
    resistance_growth: float = Field(default=3e-7, gt=0)     # ohms/cycle
    base_temperature: float = Field(default=31.0, gt=0)      # degrees C
    temperature_amplitude: float = Field(default=3.0, gt=0)  # degrees C
    charge_time_base: float = Field(default=10.0, gt=0)      # minutes
    noise_scale: float = Field(default=0.0, ge=0)            # relative SD


FloatRange = Tuple[float, float]


class SyntheticRanges(BaseModel):
    """Per-field [min, max] ranges from which fleet parameters are drawn uniformly."""
    model_config = ConfigDict(frozen=True)

    nominal_capacity: FloatRange = (1.1, 1.1)
    target_eol: Tuple[int, int] = (500, 2000)
    linear_fade_rate: FloatRange = (1e-5, 5e-5)
    knee_sharpness: FloatRange = (8.0, 16.0)
    knee_position: FloatRange = (0.6, 0.85)
    base_resistance: FloatRange = (0.014, 0.018)
    resistance_growth: FloatRange = (2e-7, 6e-7)
    base_temperature: FloatRange = (30.0, 32.0)
    temperature_amplitude: FloatRange = (2.0, 5.0)
    charge_time_base: FloatRange = (8.0, 14.0)
    noise_scale: FloatRange = (0.002, 0.005)

    @model_validator(mode='after')
    def _check_ranges(self) -> 'SyntheticRanges':
        for name in type(self).model_fields:
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"range for {name} has min > max")
        return self

    @classmethod
    def fixed(cls, params: SyntheticCellParams) -> 'SyntheticRanges':
        """Degenerate ranges that always reproduce `params`."""
        return cls(**{name: (value, value) for name, value in params.model_dump().items()})
