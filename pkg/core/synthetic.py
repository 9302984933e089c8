# core/synthetic.py
"""
Synthetic degradation histories with known ground-truth end of life.

Capacity fade follows a linear trend plus an exponential knee,

    Qd(c) = Q0 - a*c - b*exp(k*(c - c_knee)),

with b found by bisection so that Qd passes 0.8*Q0 half a cycle before
target_eol; the first cycle strictly below the threshold is then exactly
target_eol. The discharge curve Q(V) of each cycle is a logistic profile
normalised so that its maximum (at the lowest voltage) equals Qd(c). With
age the profile widens and its plateau drifts down, so an older curve lies
below a younger one at every voltage.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import bisect
from scipy.special import expit

from core.eol import first_crossing
from core.exceptions import SyntheticParameterError
from schemas.cell_schemas import CellHistory, CycleRecord, SyntheticCellParams, SyntheticRanges, VoltageCapacityCurve

logger = logging.getLogger(__name__)

EOL_FRACTION = 0.8

# --- Discharge curve shape ---
VOLTAGE_HIGH = 3.5
VOLTAGE_LOW = 2.0
N_VOLTAGE_POINTS = 100
PLATEAU_VOLTAGE = 3.3           # V, at cycle 0
PLATEAU_DRIFT_AT_EOL = 0.15     # V lost by target_eol
BASE_WIDTH = 0.08               # V, at cycle 0
WIDTH_GROWTH_AT_EOL = 0.25      # relative widening by target_eol

N_TEMPERATURE_POINTS = 12
NOISE_CLIP = (0.5, 1.5)
PARAMS_STREAM = 1

VOLTAGE_GRID = np.linspace(VOLTAGE_HIGH, VOLTAGE_LOW, N_VOLTAGE_POINTS)
VOLTAGE_GRID.setflags(write=False)


@dataclass(frozen=True)
class FadeCurve:
    """Closed-form capacity fade Qd(c) = q0 - a*c - b*exp(k*(c - c_knee))."""
    q0: float
    a: float
    b: float
    k: float
    c_knee: float

    def capacity(self, cycle):
        cycle = np.asarray(cycle, dtype=np.float64)
        return self.q0 - self.a * cycle - self.b * np.exp(self.k * (cycle - self.c_knee))


def fade_curve(params: SyntheticCellParams) -> FadeCurve:
    """Solves the knee amplitude b so the 80% crossing lands on params.target_eol."""
    q0 = params.nominal_capacity
    target = params.target_eol
    k = params.knee_sharpness / target
    c_knee = params.knee_position * target
    a = params.linear_fade_rate
    threshold = EOL_FRACTION * q0
    crossing = target - 0.5

    def excess(b: float) -> float:
        return q0 - a * crossing - b * np.exp(k * (crossing - c_knee)) - threshold

    if excess(0.0) <= 0:
        raise SyntheticParameterError(
            f"linear fade {a:g} Ah/cycle alone crosses {EOL_FRACTION:.0%} before cycle {target}; "
            "cannot bracket the knee amplitude"
        )
    upper = 1.0
    for _ in range(200):
        if excess(upper) < 0:
            break
        upper *= 2.0
    else:
        raise SyntheticParameterError(f"cannot bracket the knee amplitude for target EoL {target}")
    b = bisect(excess, 0.0, upper, xtol=1e-15, maxiter=500)
    return FadeCurve(q0=q0, a=a, b=b, k=k, c_knee=c_knee)


def plateau_voltage(cycle, target_eol: int):
    return PLATEAU_VOLTAGE - PLATEAU_DRIFT_AT_EOL * np.asarray(cycle, dtype=np.float64) / target_eol


def curve_width(cycle, target_eol: int):
    return BASE_WIDTH * (1.0 + WIDTH_GROWTH_AT_EOL * np.asarray(cycle, dtype=np.float64) / target_eol)


def capacity_at(voltage, discharge_capacity, cycle, target_eol: int) -> np.ndarray:
    """Closed-form Q(V) of the synthetic discharge curve, one row per cycle (scalars give a single row)."""
    cycle = np.atleast_1d(np.asarray(cycle, dtype=np.float64))
    v0 = plateau_voltage(cycle, target_eol)[..., None]
    width = curve_width(cycle, target_eol)[..., None]
    qd = np.atleast_1d(np.asarray(discharge_capacity, dtype=np.float64))[..., None]
    voltage = np.asarray(voltage, dtype=np.float64)
    profile = expit((v0 - voltage) / width) / expit((v0 - VOLTAGE_LOW) / width)
    return qd * profile


def discharge_curve(discharge_capacity: float, cycle: int, target_eol: int) -> VoltageCapacityCurve:
    """Samples the synthetic Q(V) on the fixed 100-point voltage grid."""
    capacity = capacity_at(VOLTAGE_GRID, discharge_capacity, cycle, target_eol)[0]
    return VoltageCapacityCurve(voltage=VOLTAGE_GRID, capacity=capacity)


def _noise(rng: np.random.Generator, scale: float, size) -> np.ndarray:
    """Relative Gaussian multiplier, clipped so physical quantities stay positive."""
    return np.clip(1.0 + scale * rng.standard_normal(size), *NOISE_CLIP)


def generate_cell(
    seed: int, params: SyntheticCellParams, n_cycles: int, cell_id: Optional[str] = None
) -> CellHistory:
    """
    Builds a deterministic history of `n_cycles` cycles from (seed, params).
    The history may stop before target_eol; eol_cycle is set only when the
    recorded capacities actually cross the threshold.
    """
    if n_cycles < 1:
        raise SyntheticParameterError("n_cycles must be at least 1")
    rng = np.random.default_rng(seed)
    fade = fade_curve(params)
    cycles = np.arange(1, n_cycles + 1, dtype=np.float64)
    clean_capacity = fade.capacity(cycles)
    if np.any(clean_capacity <= 0):
        raise SyntheticParameterError(f"capacity reaches zero within {n_cycles} cycles")

    scale = params.noise_scale
    capacity = clean_capacity * _noise(rng, scale, n_cycles)
    clean_resistance = params.base_resistance + params.resistance_growth * cycles
    resistance = clean_resistance * _noise(rng, scale, n_cycles)
    charge_time = params.charge_time_base * clean_capacity / params.nominal_capacity * _noise(rng, scale, n_cycles)
    temperature_noise = scale * params.temperature_amplitude * rng.standard_normal((n_cycles, N_TEMPERATURE_POINTS))

    curves = capacity_at(VOLTAGE_GRID, capacity, cycles, params.target_eol)
    heating = clean_resistance / clean_resistance[0]
    phase = np.linspace(0.0, 1.0, N_TEMPERATURE_POINTS)

    records: List[CycleRecord] = []
    for i in range(n_cycles):
        times = phase * (2.0 * charge_time[i] * 60.0)
        temperature = (
            params.base_temperature
            + params.temperature_amplitude * heating[i] * np.sin(np.pi * phase)
            + temperature_noise[i]
        )
        records.append(CycleRecord(
            cycle_index=i + 1,
            discharge_capacity=float(capacity[i]),
            charge_time=float(charge_time[i]),
            internal_resistance=float(resistance[i]),
            temperature_time=times,
            temperature=temperature,
            discharge_curve=VoltageCapacityCurve(voltage=VOLTAGE_GRID, capacity=curves[i]),
        ))

    eol = first_crossing(capacity, EOL_FRACTION * params.nominal_capacity)
    return CellHistory(
        cell_id=cell_id or f"synth-{seed}",
        nominal_capacity=params.nominal_capacity,
        cycles=tuple(records),
        eol_cycle=eol,
    )


def cell_seed(fleet_seed: int, index: int) -> int:
    """Per-cell seed derived from (fleet seed, index); other cells never shift it."""
    return int(np.random.SeedSequence([fleet_seed, index]).generate_state(1, dtype=np.uint64)[0])


def sample_params(rng: np.random.Generator, ranges: SyntheticRanges) -> SyntheticCellParams:
    """Draws each parameter uniformly from its range, in field order."""
    values = {}
    for name in SyntheticCellParams.model_fields:
        low, high = getattr(ranges, name)
        if name == 'target_eol':
            values[name] = int(rng.integers(low, high, endpoint=True))
        else:
            values[name] = float(rng.uniform(low, high))
    return SyntheticCellParams(**values)


def default_history_length(target_eol: int) -> int:
    """Cycles recorded for a fleet cell: a short tail past the target so noisy crossings are captured."""
    return target_eol + max(20, int(np.ceil(0.05 * target_eol)))


def fleet_member(seed: int, index: int, ranges: SyntheticRanges, n_cycles: Optional[int] = None) -> CellHistory:
    params = sample_params(np.random.default_rng([seed, index, PARAMS_STREAM]), ranges)
    length = n_cycles if n_cycles is not None else default_history_length(params.target_eol)
    return generate_cell(cell_seed(seed, index), params, length, cell_id=f"synth-{index:04d}")


def generate_fleet(
    seed: int,
    n: int,
    ranges: Optional[SyntheticRanges] = None,
    n_cycles: Optional[int] = None,
    n_jobs: int = 1,
) -> List[CellHistory]:
    """Generates `n` cells with parameters drawn from `ranges` (defaults: EoL 500-2000)."""
    if n < 1:
        raise SyntheticParameterError("a fleet needs at least one cell")
    if seed < 0:
        raise SyntheticParameterError("fleet seed must be non-negative")
    ranges = ranges or SyntheticRanges()
    logger.info(f"Generating a synthetic fleet of {n} cells (seed {seed}).")
    fleet = Parallel(n_jobs=n_jobs)(
        delayed(fleet_member)(seed, index, ranges, n_cycles) for index in range(n)
    )
    labelled = sum(history.eol_cycle is not None for history in fleet)
    logger.info(f"Synthetic fleet ready: {labelled} of {n} cells reach end of life within their record.")
    return list(fleet)
