"""Small input-validation helpers shared by the estimators and loss functions."""
from __future__ import annotations

import numpy as np


def check_matrix(X, name="X", dtype=np.float64, min_rows=1, min_cols=1):
    """Coerce ``X`` to a 2-D float array and reject non-finite entries."""
    A = np.asarray(X, dtype=dtype)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    n, d = A.shape
    if n < min_rows or d < min_cols:
        raise ValueError(f"{name} must be at least {min_rows}x{min_cols}, got {n}x{d}")
    if not np.all(np.isfinite(A)):
        bad = int(np.argwhere(~np.isfinite(A).all(axis=1))[0, 0])
        raise ValueError(f"{name} contains a non-finite value (row {bad})")
    return A


def check_vector(v, name="v", dtype=np.float64):
    a = np.asarray(v, dtype=dtype)
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains a non-finite value")
    return a


def check_same_length(a, b, name_a="a", name_b="b"):
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {name_a} has {len(a)}, {name_b} has {len(b)}")


def check_in_range(value, name, low, high, low_open=False, high_open=False):
    """Validate a scalar against an interval; brackets follow the open flags."""
    ok_low = value > low if low_open else value >= low
    ok_high = value < high if high_open else value <= high
    if not (ok_low and ok_high):
        lo = "(" if low_open else "["
        hi = ")" if high_open else "]"
        raise ValueError(f"{name} must lie in {lo}{low}, {high}{hi}, got {value}")
    return value
