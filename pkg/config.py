# config.py
from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import List

load_dotenv(override=True)


class Settings(BaseSettings):
    """
    Defines the application's configuration settings.
    Every field can be overridden with an EOL_-prefixed environment variable
    or an entry in the .env file.
    """
    model_config = SettingsConfigDict(
        env_file='.env', env_file_encoding='utf-8', env_prefix='EOL_', extra='ignore'
    )

    # --- End-of-Life Labelling ---
    eol_threshold_fraction: float = Field(
        default=0.8, gt=0.0, lt=1.0,
        description="Fraction of nominal capacity below which a cell has reached end of life."
    )
    min_eol: int = Field(
        default=500, ge=0,
        description="Cells reaching end of life before this cycle are excluded from training and evaluation."
    )

    # --- Feature Extraction ---
    reference_cycle: int = 10
    dq_grid_size: int = Field(default=1000, ge=2)
    dq_log_transform: bool = Field(
        default=True,
        description="Use log10 magnitudes for the delta-Q minimum and variance (False = raw mode)."
    )

    # --- Prediction ---
    n_prediction_samples: int = Field(default=100, ge=2)
    histogram_bins: int = Field(default=100, ge=1)

    # --- Experiment Protocol ---
    prediction_cycles: List[int] = Field(default_factory=lambda: [100, 200, 300, 400])
    n_runs: int = Field(default=10, ge=1)
    train_frac: float = Field(default=0.8, gt=0.0, lt=1.0)
    n_jobs: int = 1

    # --- Baseline Hyperparameter Grids ---
    knn_grid: List[int] = Field(default_factory=lambda: [3, 5, 7, 9])
    en_lambda_grid: List[float] = Field(default_factory=lambda: [1e-3, 1e-2, 1e-1, 1.0])
    en_alpha_grid: List[float] = Field(default_factory=lambda: [0.1, 0.5, 0.9])
    cv_folds: int = Field(default=5, ge=2)

    # --- General Settings ---
    log_level: str = "INFO"


try:
    settings = Settings()
except Exception as e:
    print(f"FATAL: Failed to load application settings. Error: {e}")
    print("Please check the EOL_* environment variables and the .env file.")
    raise
