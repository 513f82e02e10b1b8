"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array, check_consistent_length

from .exceptions import ShapeMismatch


def check_sequences(X, n_features: int | None = None) -> np.ndarray:
    """Validate a (n_samples, n_timesteps, n_features) float array."""
    X = check_array(X, allow_nd=True, dtype=np.float64, ensure_all_finite=True)
    if X.ndim != 3:
        raise ShapeMismatch(f"expected a 3-D (samples, timesteps, features) array, got {X.ndim}-D")
    if n_features is not None and X.shape[2] != n_features:
        raise ShapeMismatch(f"X has {X.shape[2]} features, expected {n_features}")
    return X


def check_targets(X: np.ndarray, y) -> np.ndarray:
    y = check_array(y, ensure_2d=False, dtype=np.float64, ensure_all_finite=True)
    if y.ndim != 1:
        raise ShapeMismatch(f"y must be 1-D, got shape {y.shape}")
    check_consistent_length(X, y)
    return y
