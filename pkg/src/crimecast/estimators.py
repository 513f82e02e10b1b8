"""scikit-learn style wrappers around the scaler and the recurrent network."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sequences, check_targets
from .features import TARGET_COLUMN, fit_scaler_array
from .nn import NetworkSpec
from .training import TrainConfig, predict, train_model


class SequenceScaler(TransformerMixin, BaseEstimator):
    """Per-feature z-scoring over every timestep row of a sequence stack.

    The target is scaled with the statistics of ``target_column``.
    """

    def __init__(self, target_column: int = TARGET_COLUMN):
        self.target_column = target_column

    def fit(self, X, y=None):
        X = check_sequences(X)
        self.scaler_ = fit_scaler_array(X)
        self.n_features_in_ = X.shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "scaler_")
        X = check_sequences(X, self.n_features_in_)
        return self.scaler_.transform(X)

    def transform_target(self, y):
        check_is_fitted(self, "scaler_")
        return self._column_scale(y, inverse=False)

    def inverse_transform_target(self, y):
        check_is_fitted(self, "scaler_")
        return self._column_scale(y, inverse=True)

    def _column_scale(self, y, inverse):
        mean = self.scaler_.means[self.target_column]
        std = self.scaler_.stds[self.target_column]
        y = np.asarray(y, dtype=float)
        return y * std + mean if inverse else (y - mean) / std


class RecurrentRegressor(RegressorMixin, BaseEstimator):
    """LSTM -> GRU -> dropout -> dense regressor on (samples, timesteps, features) input.

    Early stopping and learning-rate reduction watch ``validation_data`` when
    given to ``fit``, otherwise the training loss.
    """

    def __init__(
        self,
        lstm_units: int = 64,
        gru_units: int = 32,
        dropout: float = 0.2,
        learning_rate: float = 0.001,
        epochs: int = 100,
        batch_size: int = 64,
        es_patience: int = 10,
        lr_patience: int = 5,
        lr_factor: float = 0.5,
        min_lr: float = 1e-6,
        random_state: int = 0,
    ):
        self.lstm_units = lstm_units
        self.gru_units = gru_units
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.es_patience = es_patience
        self.lr_patience = lr_patience
        self.lr_factor = lr_factor
        self.min_lr = min_lr
        self.random_state = random_state

    @classmethod
    def from_config(cls, config: TrainConfig, **kwargs) -> "RecurrentRegressor":
        return cls(
            learning_rate=config.learning_rate, epochs=config.epochs,
            batch_size=config.batch_size, es_patience=config.es_patience,
            lr_patience=config.lr_patience, lr_factor=config.lr_factor,
            min_lr=config.min_lr, random_state=config.seed, **kwargs,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate, epochs=self.epochs,
            batch_size=self.batch_size, es_patience=self.es_patience,
            lr_patience=self.lr_patience, lr_factor=self.lr_factor,
            min_lr=self.min_lr, seed=self.random_state,
        )

    def fit(self, X, y, validation_data=None):
        X = check_sequences(X)
        y = check_targets(X, y)
        if validation_data is None:
            X_val, y_val = X, y
        else:
            X_val = check_sequences(validation_data[0], X.shape[2])
            y_val = check_targets(X_val, validation_data[1])
        spec = NetworkSpec(X.shape[2], self.lstm_units, self.gru_units, self.dropout)
        self.params_, self.train_log_ = train_model(
            X, y, X_val, y_val, self.train_config(), spec=spec)
        self.n_features_in_ = X.shape[2]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_sequences(X, self.n_features_in_)
        return predict(self.params_, X)
