"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_matrix",
    "as_vector",
    "as_labels",
    "check_lengths",
    "require",
]


def require(condition: bool, message: str) -> None:
    """Raise ``ValueError`` with ``message`` unless ``condition`` holds."""
    if not condition:
        raise ValueError(message)


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a nonempty, finite, 2-d float64 array."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    require(arr.ndim == 2, f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    require(arr.size > 0, f"{name} must be nonempty")
    require(bool(np.all(np.isfinite(arr))), f"{name} must contain only finite values")
    return arr


def as_vector(v, name: str = "v") -> np.ndarray:
    """Coerce to a nonempty, finite, 1-d float64 array."""
    arr = np.asarray(v, dtype=float).ravel()
    require(arr.size > 0, f"{name} must be nonempty")
    require(bool(np.all(np.isfinite(arr))), f"{name} must contain only finite values")
    return arr


def as_labels(y, name: str = "y") -> np.ndarray:
    """Coerce to a 1-d array with entries in {-1, +1}."""
    arr = as_vector(y, name)
    require(bool(np.all(np.abs(arr) == 1.0)), f"{name} entries must all be -1 or +1")
    return arr


def check_lengths(a, b, name_a: str = "a", name_b: str = "b") -> None:
    """Require two arrays to have the same leading dimension."""
    require(
        len(a) == len(b),
        f"{name_a} and {name_b} must have the same length, got {len(a)} and {len(b)}",
    )
