"""End-to-end forecasting runs and the repeated-trial protocol."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

from .estimators import RecurrentRegressor, SequenceScaler
from .exceptions import CrimecastError, TrialError
from .features import SplitDataset, build_sequences, stack_sequences, time_series_split
from .metrics import AggregateReport, StatePrediction, TrialMetrics, aggregate_trials
from .panel import PanelDataset
from .training import TrainConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureConfig:
    lag: int = 5
    rolling_mean_window: int = 3
    rolling_std_window: int = 4


@dataclass
class PipelineResult:
    model: RecurrentRegressor
    scaler: SequenceScaler
    split: SplitDataset
    predictions: list[StatePrediction]


def prepare_split(dataset: PanelDataset, features: FeatureConfig = FeatureConfig()) -> SplitDataset:
    sequences = build_sequences(dataset, features.lag, features.rolling_mean_window,
                                features.rolling_std_window)
    return time_series_split(sequences)


def run_pipeline(
    dataset: PanelDataset,
    config: TrainConfig = TrainConfig(),
    features: FeatureConfig = FeatureConfig(),
    split: SplitDataset | None = None,
) -> PipelineResult:
    """Sequences -> split -> scale on train -> fit -> unscaled test-year predictions."""
    split = split or prepare_split(dataset, features)
    X_train, y_train = stack_sequences(split.train)
    X_val, y_val = stack_sequences(split.validation)
    X_test, _ = stack_sequences(split.test)

    scaler = SequenceScaler().fit(X_train)
    model = RecurrentRegressor.from_config(config)
    model.fit(
        scaler.transform(X_train), scaler.transform_target(y_train),
        validation_data=(scaler.transform(X_val), scaler.transform_target(y_val)),
    )
    predicted = scaler.inverse_transform_target(model.predict(scaler.transform(X_test)))
    predictions = [
        StatePrediction(s.state, s.target_year, float(p), s.target)
        for s, p in zip(split.test, predicted)
    ]
    return PipelineResult(model, scaler, split, predictions)


Timers = tuple[Callable[[], float], Callable[[], float]]
DEFAULT_TIMERS: Timers = (time.perf_counter, time.process_time)


def run_trial(
    dataset: PanelDataset,
    config: TrainConfig,
    trial_id: int,
    seed: int,
    features: FeatureConfig = FeatureConfig(),
    split: SplitDataset | None = None,
    timers: Timers = DEFAULT_TIMERS,
) -> TrialMetrics:
    wall, cpu = timers
    wall0, cpu0 = wall(), cpu()
    try:
        result = run_pipeline(dataset, replace(config, seed=seed), features, split)
    except CrimecastError as exc:
        raise TrialError(trial_id, exc) from exc
    return TrialMetrics.from_predictions(
        trial_id, seed, result.predictions,
        wall_time_s=wall() - wall0,
        cpu_time_s=cpu() - cpu0,
        stopped_epoch=result.model.train_log_.stopped_epoch,
    )


def run_trials(
    dataset: PanelDataset,
    config: TrainConfig = TrainConfig(),
    n_trials: int = 50,
    base_seed: int = 0,
    features: FeatureConfig = FeatureConfig(),
    jobs: int = 1,
    timers: Timers = DEFAULT_TIMERS,
) -> tuple[list[TrialMetrics], AggregateReport]:
    """Trial ``i`` trains with seed ``base_seed + i``; results come back in trial order."""
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    split = prepare_split(dataset, features)
    args = [(dataset, config, i, base_seed + i, features, split) for i in range(n_trials)]
    if jobs <= 1:
        trials = []
        for a in args:
            trials.append(run_trial(*a, timers=timers))
            t = trials[-1]
            log.info("trial %d/%d seed %d total_loss %.2f test_mse %.2f (%.1fs)",
                     t.trial_id + 1, n_trials, t.seed, t.total_loss, t.test_mse, t.wall_time_s)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_trial, *a, timers=timers) for a in args]
            trials = [f.result() for f in futures]
    return trials, aggregate_trials(trials)
