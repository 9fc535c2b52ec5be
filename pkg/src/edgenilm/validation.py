"""Small input-validation helpers used by the public entry points."""

import numpy as np

from .errors import ConfigurationError, DomainError, ShapeError


def as_float_series(x, name="series", allow_empty=False):
    """Coerce to a 1-D float64 array and reject NaN/Inf."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise DomainError(f"{name} is empty")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def as_feature_matrix(X, name="X"):
    """Coerce to a 2-D float64 array of finite values."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def check_positive(value, name):
    if not value > 0:
        raise ConfigurationError(f"{name} must be positive, got {value!r}")
    return value


def check_power_of_two(n, name="n"):
    if not (isinstance(n, (int, np.integer)) and n >= 2 and (n & (n - 1)) == 0):
        raise ConfigurationError(f"{name} must be a power of two >= 2, got {n!r}")
    return int(n)
