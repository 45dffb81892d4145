"""Input validation helpers shared by the public API."""

import numpy as np

from .errors import DimensionMismatch, NonFinite


def check_vector(v, dim=None, name="vector"):
    """Coerce to a finite 1-d float array, optionally of fixed length."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-d, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise NonFinite(f"{name} contains non-finite entries")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {dim}")
    return v


def check_matrix(M, shape=None, name="matrix"):
    """Coerce to a finite 2-d float array, optionally of fixed shape."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise NonFinite(f"{name} contains non-finite entries")
    if shape is not None and M.shape != tuple(shape):
        raise DimensionMismatch(f"{name} has shape {M.shape}, expected {tuple(shape)}")
    return M


def check_positive(value, name="value"):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def check_count(value, name="count", minimum=1):
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)
