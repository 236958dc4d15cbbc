"""Input checking shared by the public functions and estimators."""

import numbers

import numpy as np

from .exceptions import InvalidArgumentError


def check_points(X, name="X", min_rows=1):
    """Return ``X`` as a finite 2-D float64 array with at least ``min_rows`` rows.

    One-dimensional input is treated as a column of scalar samples.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise InvalidArgumentError(
            f"{name} needs at least {min_rows} rows, got {X.shape[0]}")
    if X.shape[1] == 0:
        raise InvalidArgumentError(f"{name} has zero columns")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return X


def check_paired(X1, X2, min_rows=2):
    X1 = check_points(X1, "sensor1", min_rows)
    X2 = check_points(X2, "sensor2", min_rows)
    if X1.shape[0] != X2.shape[0]:
        raise InvalidArgumentError(
            f"sensors are not aligned: {X1.shape[0]} vs {X2.shape[0]} rows")
    return X1, X2


def check_positive_int(value, name, low=1, high=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < low or (high is not None and value > high):
        bound = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise InvalidArgumentError(f"{name}={value} outside {bound}")
    return value


def check_positive_real(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"{name} must be a real number, got {value!r}")
    if not np.isfinite(value) or value <= 0:
        raise InvalidArgumentError(f"{name} must be finite and > 0, got {value}")
    return value


def check_alpha(alpha):
    try:
        alpha = float(alpha)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"alpha must be a real number, got {alpha!r}")
    if not (0.0 <= alpha <= 1.0):
        raise InvalidArgumentError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha
