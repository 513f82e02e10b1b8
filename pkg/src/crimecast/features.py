"""Lagged sequences, rolling statistics, scaling and the chronological split."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import EmptyTrainingSet, InsufficientHistory, InvalidArgument, WindowTooLarge
from .panel import PanelDataset, PanelRecord

FEATURE_NAMES = (
    "violent_crime",
    "population",
    "unemployment_rate",
    "median_income",
    "hs_grad_rate",
    "political_status",
    "pct_male",
    "pct_female",
    "crime_rolling_mean",
    "crime_rolling_std",
)
N_FEATURES = len(FEATURE_NAMES)
TARGET_COLUMN = 0
STD_FLOOR = 1e-8

_POLITICAL_CODES = {"R": -1.0, "D": 1.0, "S": 0.0}


def encode_political(status: str) -> float:
    return _POLITICAL_CODES[status]


def _check_window(series: np.ndarray, window: int, minimum: int) -> None:
    if window < minimum:
        raise InvalidArgument(f"window must be >= {minimum}, got {window}")
    if window > len(series):
        raise WindowTooLarge(f"window {window} exceeds series length {len(series)}")


def _trailing_windows(series: np.ndarray, window: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(series, window)


def rolling_mean(series: Sequence[float], window: int) -> np.ma.MaskedArray:
    """Trailing mean; the first ``window - 1`` positions are masked."""
    series = np.asarray(series, dtype=float)
    _check_window(series, window, 1)
    out = np.ma.masked_all(series.shape, dtype=float)
    out[window - 1:] = _trailing_windows(series, window).mean(axis=1)
    return out


def rolling_std(series: Sequence[float], window: int) -> np.ma.MaskedArray:
    """Trailing population standard deviation (ddof=0); prefix masked."""
    series = np.asarray(series, dtype=float)
    _check_window(series, window, 2)
    out = np.ma.masked_all(series.shape, dtype=float)
    out[window - 1:] = _trailing_windows(series, window).std(axis=1)
    return out


@dataclass(frozen=True)
class SampleSequence:
    state: str
    target_year: int
    inputs: np.ndarray  # (lag, N_FEATURES), rows oldest first
    target: float


def state_feature_matrix(
    records: Sequence[PanelRecord], mean_window: int = 3, std_window: int = 4
) -> np.ma.MaskedArray:
    """Per-year feature rows for one state's year-ordered records.

    Rows whose rolling statistics are undefined are masked in the last two columns.
    """
    crime = np.array([r.violent_crime for r in records], dtype=float)
    base = np.array([
        [
            r.violent_crime,
            r.population,
            r.unemployment_rate,
            r.median_income,
            r.hs_grad_rate,
            encode_political(r.political_status),
            r.pct_male,
            r.pct_female,
        ]
        for r in records
    ], dtype=float)
    mean = rolling_mean(crime, mean_window)
    std = rolling_std(crime, std_window)
    return np.ma.column_stack([base, mean, std])


def build_sequences(
    dataset: PanelDataset, lag: int = 5, mean_window: int = 3, std_window: int = 4
) -> list[SampleSequence]:
    """One sample per state and target year with a fully defined lag window.

    Sequences come out grouped by state, target years ascending.
    """
    if lag < 1:
        raise InvalidArgument(f"lag must be >= 1, got {lag}")
    prefix = max(mean_window, std_window) - 1
    sequences = []
    for state in dataset.states:
        records = dataset.for_state(state)
        years = [r.year for r in records]
        if years != list(range(years[0], years[0] + len(years))):
            raise InsufficientHistory(state, "years are not contiguous")
        if len(records) < lag + prefix + 1:
            raise InsufficientHistory(
                state,
                f"{len(records)} years available, need at least {lag + prefix + 1} "
                f"for lag {lag} and rolling windows {mean_window}/{std_window}",
            )
        features = state_feature_matrix(records, mean_window, std_window)
        defined = ~np.ma.getmaskarray(features).any(axis=1)
        values = features.filled(np.nan)
        for t in range(lag, len(records)):
            if not defined[t - lag:t].all():
                continue
            sequences.append(SampleSequence(
                state=state,
                target_year=years[t],
                inputs=values[t - lag:t].copy(),
                target=float(records[t].violent_crime),
            ))
    return sequences


def stack_sequences(sequences: Sequence[SampleSequence]) -> tuple[np.ndarray, np.ndarray]:
    """(n, lag, features) inputs and (n,) targets."""
    if not sequences:
        return np.empty((0, 0, N_FEATURES)), np.empty(0)
    X = np.stack([s.inputs for s in sequences])
    y = np.array([s.target for s in sequences], dtype=float)
    return X, y


@dataclass(frozen=True)
class Scaler:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.means) / self.stds

    def scale_target(self, y):
        return (np.asarray(y, dtype=float) - self.means[TARGET_COLUMN]) / self.stds[TARGET_COLUMN]

    def unscale_target(self, y):
        return np.asarray(y, dtype=float) * self.stds[TARGET_COLUMN] + self.means[TARGET_COLUMN]


def fit_scaler_array(X: np.ndarray) -> Scaler:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise EmptyTrainingSet("cannot fit a scaler on zero sequences")
    rows = X.reshape(-1, X.shape[-1])
    means = rows.mean(axis=0)
    stds = np.maximum(rows.std(axis=0), STD_FLOOR)
    return Scaler(means, stds)


def fit_scaler(train_sequences: Sequence[SampleSequence]) -> Scaler:
    if not train_sequences:
        raise EmptyTrainingSet("cannot fit a scaler on zero sequences")
    X, _ = stack_sequences(train_sequences)
    return fit_scaler_array(X)


def apply_scaler(
    scaler: Scaler, sequences: Sequence[SampleSequence]
) -> tuple[np.ndarray, np.ndarray]:
    X, y = stack_sequences(sequences)
    if not len(sequences):
        return X, y
    return scaler.transform(X), scaler.scale_target(y)


def unscale_target(scaler: Scaler, y):
    return scaler.unscale_target(y)


@dataclass(frozen=True)
class SplitDataset:
    train: tuple[SampleSequence, ...]
    validation: tuple[SampleSequence, ...]
    test: tuple[SampleSequence, ...]


def time_series_split(sequences: Iterable[SampleSequence]) -> SplitDataset:
    """Test on the latest target year, validate on the one before, train on the rest."""
    sequences = list(sequences)
    per_state: dict[str, int] = {}
    for s in sequences:
        per_state[s.state] = per_state.get(s.state, 0) + 1
    for state, count in per_state.items():
        if count < 3:
            raise InsufficientHistory(state, f"{count} sequences, need at least 3 to split")
    if not sequences:
        raise InsufficientHistory("-", "no sequences to split")
    years = sorted({s.target_year for s in sequences})
    test_year, val_year = years[-1], years[-2]
    return SplitDataset(
        train=tuple(s for s in sequences if s.target_year < val_year),
        validation=tuple(s for s in sequences if s.target_year == val_year),
        test=tuple(s for s in sequences if s.target_year == test_year),
    )


SEQUENCE_CSV_HEADER = ("state", "target_year", "timestep", *FEATURE_NAMES, "target")


def export_sequences(sequences: Iterable[SampleSequence], path: str | Path) -> None:
    """Debug dump: one row per (state, target_year, timestep)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SEQUENCE_CSV_HEADER)
        for s in sequences:
            for step, row in enumerate(s.inputs):
                writer.writerow([s.state, s.target_year, step, *map(repr, row.tolist()), repr(s.target)])
