# schemas/report_schemas.py
"""
Defines the Pydantic data models (Data Contracts) for experiment reports.
Sigma and coverage fields are null for models that carry no uncertainty.
"""
from typing import Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, Field

TABLE_METRICS = ('mae', 'mape', 'sigma', 'coverage')


class RunMetrics(BaseModel):
    """Metrics of one model at one prediction cycle in one run."""
    run: int
    seed: int
    model: str
    prediction_cycle: int
    n_train: int
    n_test: int
    train_mae: float = Field(..., ge=0)
    test_mae: float = Field(..., ge=0)
    train_mape: float = Field(..., ge=0)
    test_mape: float = Field(..., ge=0)
    train_sigma: Optional[float] = None
    test_sigma: Optional[float] = None
    train_coverage: Optional[float] = Field(default=None, ge=0, le=100)
    test_coverage: Optional[float] = Field(default=None, ge=0, le=100)


class CycleSummary(BaseModel):
    """Run-averaged metrics of one model at one prediction cycle."""
    model: str
    prediction_cycle: int
    n_runs: int
    train_mae: float = Field(..., ge=0)
    test_mae: float = Field(..., ge=0)
    train_mape: float = Field(..., ge=0)
    test_mape: float = Field(..., ge=0)
    train_sigma: Optional[float] = None
    test_sigma: Optional[float] = None
    train_coverage: Optional[float] = Field(default=None, ge=0, le=100)
    test_coverage: Optional[float] = Field(default=None, ge=0, le=100)
    overfit_gap_pct: Optional[float] = None


class ExcludedRun(BaseModel):
    run: int
    model: str
    prediction_cycle: int
    reason: str


class ExperimentReport(BaseModel):
    models: List[str]
    prediction_cycles: List[int]
    n_runs: int
    base_seed: int
    train_frac: float
    seeds: List[int]
    n_cells: int
    summaries: List[CycleSummary] = Field(default_factory=list)
    runs: List[RunMetrics] = Field(default_factory=list)
    excluded: List[ExcludedRun] = Field(default_factory=list)
    not_implemented: List[str] = Field(default_factory=list)
    # Percent by which mean test sigma at the first cycle exceeds that at the last.
    uncertainty_trend: Dict[str, Optional[float]] = Field(default_factory=dict)

    def summary(self, model: str, prediction_cycle: int) -> Optional[CycleSummary]:
        for summary in self.summaries:
            if summary.model == model and summary.prediction_cycle == prediction_cycle:
                return summary
        return None

    def table(self) -> pd.DataFrame:
        """Rows are prediction cycles; columns are <model>_<metric>_<split>."""
        table = pd.DataFrame({'prediction_cycle': self.prediction_cycles})
        for model in self.models:
            for metric in TABLE_METRICS:
                for split in ('train', 'test'):
                    values = []
                    for cycle in self.prediction_cycles:
                        summary = self.summary(model, cycle)
                        values.append(getattr(summary, f'{split}_{metric}') if summary else None)
                    table[f'{model}_{metric}_{split}'] = pd.array(values, dtype='Float64')
        return table
