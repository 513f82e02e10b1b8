"""Forecast error metrics and multi-trial aggregation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import EmptyInput, InconsistentStateSets, ZeroActual


@dataclass(frozen=True)
class StatePrediction:
    state: str
    year: int
    predicted: float
    actual: float


def _diffs(predictions: Sequence[StatePrediction]) -> np.ndarray:
    if not predictions:
        raise EmptyInput("need at least one prediction")
    return np.array([p.predicted - p.actual for p in predictions], dtype=float)


def total_loss(predictions: Sequence[StatePrediction]) -> float:
    """Sum of absolute errors over states."""
    return float(np.sum(np.abs(_diffs(predictions))))


def test_mse(predictions: Sequence[StatePrediction]) -> float:
    d = _diffs(predictions)
    return float(np.mean(d * d))


test_mse.__test__ = False  # not a pytest test when imported into test modules


def percent_error(predicted: float, actual: float) -> float:
    """Signed error as a percentage of the actual value."""
    if actual == 0:
        raise ZeroActual("percent error is undefined for an actual value of 0")
    return 100.0 * (predicted - actual) / actual


@dataclass(frozen=True)
class StateError:
    state: str
    actual: float
    predicted: float
    signed_diff: float
    percent_error: float


def state_errors(predictions: Sequence[StatePrediction]) -> list[StateError]:
    return [
        StateError(p.state, p.actual, p.predicted, p.predicted - p.actual,
                   percent_error(p.predicted, p.actual))
        for p in predictions
    ]


@dataclass
class TrialMetrics:
    trial_id: int
    seed: int
    total_loss: float
    test_mse: float
    per_state: list[StateError]
    wall_time_s: float = 0.0
    cpu_time_s: float = 0.0
    stopped_epoch: int = -1

    @classmethod
    def from_predictions(cls, trial_id: int, seed: int, predictions: Sequence[StatePrediction],
                         **extra) -> "TrialMetrics":
        return cls(trial_id, seed, total_loss(predictions), test_mse(predictions),
                   state_errors(predictions), **extra)

    @property
    def mean_percent_error(self) -> float:
        return float(np.mean([s.percent_error for s in self.per_state]))


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    range: float
    std: float

    @classmethod
    def of(cls, values) -> "MetricSummary":
        v = np.asarray(values, dtype=float)
        return cls(float(v.mean()), float(v.max() - v.min()), float(v.std()))


@dataclass(frozen=True)
class StateSummary:
    state: str
    actual: float
    mean_predicted: float
    adl: float  # mean signed (predicted - actual)
    ape: float  # mean signed percent error


SCALAR_METRICS = ("total_loss", "test_mse", "wall_time_s", "cpu_time_s", "stopped_epoch")


@dataclass
class AggregateReport:
    n_trials: int
    total_loss: MetricSummary
    test_mse: MetricSummary
    wall_time_s: MetricSummary
    cpu_time_s: MetricSummary
    stopped_epoch: MetricSummary
    percent_error: MetricSummary  # pooled over every (trial, state) pair
    per_state: list[StateSummary] = field(default_factory=list)

    @property
    def rmse(self) -> float:
        return float(np.sqrt(self.test_mse.mean))

    def to_dict(self) -> dict:
        out: dict = {"n_trials": self.n_trials}
        for name in (*SCALAR_METRICS, "percent_error"):
            s = getattr(self, name)
            out[name] = {"mean": s.mean, "range": s.range, "std": s.std}
        out["per_state"] = [
            {"state": s.state, "actual": s.actual, "mean_predicted": s.mean_predicted,
             "adl": s.adl, "ape": s.ape}
            for s in self.per_state
        ]
        return out


def aggregate_trials(trials: Sequence[TrialMetrics]) -> AggregateReport:
    """Mean, range and population std of every scalar metric, plus per-state ADL/APE."""
    if not trials:
        raise EmptyInput("need at least one trial")
    states = [s.state for s in trials[0].per_state]
    for t in trials[1:]:
        if sorted(s.state for s in t.per_state) != sorted(states):
            raise InconsistentStateSets(
                f"trial {t.trial_id} covers a different state set than trial {trials[0].trial_id}")

    scalars = {name: MetricSummary.of([getattr(t, name) for t in trials]) for name in SCALAR_METRICS}
    pooled = MetricSummary.of([s.percent_error for t in trials for s in t.per_state])

    per_state = []
    for state in states:
        rows = [next(s for s in t.per_state if s.state == state) for t in trials]
        per_state.append(StateSummary(
            state=state,
            actual=rows[0].actual,
            mean_predicted=float(np.mean([r.predicted for r in rows])),
            adl=float(np.mean([r.signed_diff for r in rows])),
            ape=float(np.mean([r.percent_error for r in rows])),
        ))
    return AggregateReport(len(trials), percent_error=pooled, per_state=per_state, **scalars)
