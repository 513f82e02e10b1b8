"""Mini-batch Adam training with plateau LR reduction and early stopping."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .exceptions import EmptyInput, EmptySplit, InvalidArgument, NonFiniteLoss, ShapeMismatch
from .nn import NetworkParams, NetworkSpec, init_params, network_backward, network_forward

log = logging.getLogger(__name__)

IMPROVEMENT_THRESHOLD = 1e-9


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 64
    es_patience: int = 10
    lr_patience: int = 5
    lr_factor: float = 0.5
    min_lr: float = 1e-6
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        checks = {
            "learning_rate": self.learning_rate > self.min_lr,
            "epochs": self.epochs >= 1,
            "batch_size": self.batch_size >= 1,
            "es_patience": self.es_patience >= 1,
            "lr_patience": self.lr_patience >= 1,
            "lr_factor": 0 < self.lr_factor < 1,
            "min_lr": self.min_lr >= 0,
            "adam_beta1": 0 <= self.adam_beta1 < 1,
            "adam_beta2": 0 <= self.adam_beta2 < 1,
            "adam_epsilon": self.adam_epsilon > 0,
        }
        for name, ok in checks.items():
            if not ok:
                raise InvalidArgument(f"{name}: invalid value {getattr(self, name)!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise InvalidArgument(f"unknown TrainConfig field(s): {', '.join(sorted(unknown))}")
        kwargs = {}
        for name, value in data.items():
            default = getattr(cls, name)
            if isinstance(default, int) and not isinstance(value, int) or isinstance(value, bool):
                raise InvalidArgument(f"{name}: expected integer, got {value!r}")
            if isinstance(default, float) and not isinstance(value, (int, float)):
                raise InvalidArgument(f"{name}: expected number, got {value!r}")
            kwargs[name] = type(default)(value)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | Path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


def mse_loss(predictions, targets) -> tuple[float, np.ndarray]:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise ShapeMismatch(f"predictions {p.shape} vs targets {t.shape}")
    if p.size == 0:
        raise EmptyInput("mse_loss needs at least one prediction")
    diff = p - t
    return float(np.mean(diff * diff)), 2.0 * diff / p.size


@dataclass
class AdamState:
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step_count: int = 0

    @classmethod
    def zeros_like(cls, params: NetworkParams) -> "AdamState":
        return cls(
            {k: np.zeros_like(a) for k, a in params.named_arrays()},
            {k: np.zeros_like(a) for k, a in params.named_arrays()},
        )


def adam_step(params, gradients, state: AdamState, lr: float, config: TrainConfig = TrainConfig()):
    """One bias-corrected Adam update; returns (new params, new state).

    Works on anything exposing ``named_arrays``/``map_arrays``.
    """
    grads = dict(gradients.named_arrays())
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    step = state.step_count + 1
    m_new, v_new = {}, {}

    def update(name, theta):
        g = grads[name]
        if g.shape != theta.shape:
            raise ShapeMismatch(f"{name}: gradient {g.shape} vs parameter {theta.shape}")
        m = b1 * state.first_moment[name] + (1 - b1) * g
        v = b2 * state.second_moment[name] + (1 - b2) * g * g
        m_new[name], v_new[name] = m, v
        m_hat = m / (1 - b1 ** step)
        v_hat = v / (1 - b2 ** step)
        return theta - lr * m_hat / (np.sqrt(v_hat) + eps)

    new_params = params.map_arrays(update)
    return new_params, AdamState(m_new, v_new, step)


def make_batches(n_samples: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(n_samples)
    return [order[i:i + batch_size] for i in range(0, n_samples, batch_size)]


@dataclass
class EarlyStopState:
    patience: int = 10
    best_val_loss: float = math.inf
    epochs_since_improve: int = 0
    best_params: NetworkParams | None = None
    best_epoch: int = -1


def early_stop_update(
    state: EarlyStopState, val_loss: float, params: NetworkParams | None = None, epoch: int = -1
) -> tuple[EarlyStopState, bool]:
    if val_loss < state.best_val_loss - IMPROVEMENT_THRESHOLD:
        snapshot = params.copy() if params is not None else None
        state = replace(state, best_val_loss=val_loss, epochs_since_improve=0,
                        best_params=snapshot, best_epoch=epoch)
    else:
        state = replace(state, epochs_since_improve=state.epochs_since_improve + 1)
    return state, state.epochs_since_improve >= state.patience


@dataclass
class LrSchedulerState:
    current_lr: float = 0.001
    patience: int = 5
    factor: float = 0.5
    min_lr: float = 1e-6
    best_val_loss: float = math.inf
    epochs_since_improve: int = 0


def lr_scheduler_update(state: LrSchedulerState, val_loss: float) -> LrSchedulerState:
    if val_loss < state.best_val_loss - IMPROVEMENT_THRESHOLD:
        return replace(state, best_val_loss=val_loss, epochs_since_improve=0)
    waited = state.epochs_since_improve + 1
    if waited >= state.patience:
        return replace(state, current_lr=max(state.current_lr * state.factor, state.min_lr),
                       epochs_since_improve=0)
    return replace(state, epochs_since_improve=waited)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float
    lr: float
    event: str = ""


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    stopped_epoch: int = -1
    best_epoch: int = -1

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_mse", "val_mse", "lr", "event"])
            for r in self.records:
                writer.writerow([r.epoch, repr(r.train_mse), repr(r.val_mse), repr(r.lr), r.event])


def predict(params: NetworkParams, X: np.ndarray, batch_size: int = 1024) -> np.ndarray:
    """Eval-mode predictions for a stack of sequences."""
    X = np.asarray(X, dtype=float)
    out = [network_forward(params, X[i:i + batch_size], mode="eval")[0]
           for i in range(0, len(X), batch_size)]
    return np.concatenate(out) if out else np.empty(0)


def _all_finite(params: NetworkParams) -> bool:
    return all(np.isfinite(a).all() for _, a in params.named_arrays())


def train_model(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    config: TrainConfig = TrainConfig(),
    spec: NetworkSpec | None = None,
    params: NetworkParams | None = None,
) -> tuple[NetworkParams, TrainLog]:
    """Train on already-scaled arrays; returns the best-validation snapshot and the log.

    Per epoch: shuffled mini-batches with one Adam step each, then validation MSE
    in eval mode, then the LR scheduler, then early stopping.
    """
    X_train = np.asarray(X_train, dtype=float)
    y_train = np.asarray(y_train, dtype=float)
    X_val = np.asarray(X_val, dtype=float)
    y_val = np.asarray(y_val, dtype=float)
    if len(X_train) == 0 or len(X_val) == 0:
        raise EmptySplit("training and validation sets must be non-empty")
    if params is None:
        spec = spec or NetworkSpec(input_size=X_train.shape[2])
        params = init_params(config.seed, spec)

    dropout_rng = np.random.default_rng([config.seed, 0xD0])
    adam = AdamState.zeros_like(params)
    scheduler = LrSchedulerState(config.learning_rate, config.lr_patience,
                                 config.lr_factor, config.min_lr)
    stopper = EarlyStopState(config.es_patience)
    train_log = TrainLog()

    for epoch in range(config.epochs):
        lr = scheduler.current_lr
        sq_err = 0.0
        for batch in make_batches(len(X_train), config.batch_size, config.seed, epoch):
            pred, cache = network_forward(params, X_train[batch], mode="train", rng=dropout_rng)
            loss, d_pred = mse_loss(pred, y_train[batch])
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch, f"training loss is {loss}")
            grads = network_backward(params, cache, d_pred)
            params, adam = adam_step(params, grads, adam, lr, config)
            if not _all_finite(params):
                raise NonFiniteLoss(epoch, "non-finite parameter after Adam step")
            sq_err += loss * len(batch)
        train_mse = sq_err / len(X_train)
        val_mse, _ = mse_loss(predict(params, X_val), y_val)
        if not math.isfinite(val_mse):
            raise NonFiniteLoss(epoch, f"validation loss is {val_mse}")

        scheduler = lr_scheduler_update(scheduler, val_mse)
        stopper, stop = early_stop_update(stopper, val_mse, params, epoch)
        events = []
        if scheduler.current_lr < lr:
            events.append("lr_reduced")
        if stop:
            events.append("early_stopped")
        train_log.records.append(EpochRecord(epoch, train_mse, val_mse, lr, "|".join(events)))
        log.debug("epoch %d train %.6g val %.6g lr %.3g", epoch, train_mse, val_mse, lr)
        if stop:
            break

    train_log.stopped_epoch = train_log.records[-1].epoch
    train_log.best_epoch = stopper.best_epoch
    return stopper.best_params, train_log
