"""Shared per-step record, input validation, and float formatting helpers.

Validation happens once at public API boundaries; internal code assumes
finite, correctly shaped float64 data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, NonFiniteInputError


@dataclass(frozen=True)
class StepOutput:
    """One filter iteration: prediction, a-priori error, and bookkeeping.

    `e` is always the a-priori error d - y, with y computed from the
    coefficients as they were before this step's update.
    """

    y: float
    e: float
    grew: bool
    dict_size: int
    step_seconds: float


def as_input(u, dim: int | None = None) -> np.ndarray:
    """Coerce `u` to a finite 1-D float64 vector, optionally checking length."""
    v = np.asarray(u, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatchError(f"input must be a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(
            f"incompatible vectors: expected length {dim}, got {v.shape[0]}"
        )
    if not np.all(np.isfinite(v)):
        raise NonFiniteInputError("input vector contains non-finite entries")
    return v


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce a point set to a finite 2-D (n, L) float64 array."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise DimensionMismatchError(
            f"expected a nonempty sequence of vectors, got shape {x.shape}"
        )
    if dim is not None and x.shape[1] != dim:
        raise DimensionMismatchError(
            f"incompatible vectors: expected dimension {dim}, got {x.shape[1]}"
        )
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError("point set contains non-finite entries")
    return x


def check_target(d) -> float:
    d = float(d)
    if not np.isfinite(d):
        raise NonFiniteInputError("target value is not finite")
    return d


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (byte-stable CSV output)."""
    return "%.17g" % float(x)
