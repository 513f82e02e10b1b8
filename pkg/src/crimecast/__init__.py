"""Panel-data violent-crime forecasting with a from-scratch LSTM/GRU network."""
from .estimators import RecurrentRegressor, SequenceScaler
from .features import build_sequences, fit_scaler, apply_scaler, time_series_split
from .metrics import aggregate_trials, percent_error, test_mse, total_loss
from .nn import NetworkSpec, gradient_check, init_params, network_backward, network_forward
from .panel import load_panel, synthesize_panel, validate, write_panel
from .pipeline import run_pipeline, run_trials
from .training import TrainConfig, train_model

__version__ = "0.1.0"

__all__ = [
    "RecurrentRegressor",
    "SequenceScaler",
    "NetworkSpec",
    "TrainConfig",
    "aggregate_trials",
    "apply_scaler",
    "build_sequences",
    "fit_scaler",
    "gradient_check",
    "init_params",
    "load_panel",
    "network_backward",
    "network_forward",
    "percent_error",
    "run_pipeline",
    "run_trials",
    "synthesize_panel",
    "test_mse",
    "time_series_split",
    "total_loss",
    "train_model",
    "validate",
    "write_panel",
]
