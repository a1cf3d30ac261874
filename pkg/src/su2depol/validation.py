"""Input coercion shared by the estimator layer and the CLI."""
from __future__ import annotations

import numbers

import numpy as np

from .states import DensityState, StateValidationError, pure_state

__all__ = ["check_state", "check_states", "check_non_negative", "check_positive_int"]


def check_state(obj) -> DensityState:
    """Coerce ``obj`` into a validated :class:`DensityState`.

    Accepts a ``DensityState``, a dict in the JSON sector format, a square
    array (one sector block, ``n`` inferred from its size) or a 1-D array
    (a pure state vector, normalized here).
    """
    if isinstance(obj, DensityState):
        return obj
    if isinstance(obj, dict):
        return DensityState.from_dict(obj)
    arr = np.asarray(obj)
    if arr.ndim == 1 and arr.size >= 1:
        if not np.any(arr):
            raise StateValidationError(["state vector is zero"])
        return pure_state(arr)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return DensityState.single(arr)
    raise StateValidationError([f"cannot interpret object of shape {arr.shape} as a density state"])


def check_states(X) -> list[DensityState]:
    if isinstance(X, (DensityState, dict)):
        raise TypeError("expected a sequence of states; wrap a single state in a list")
    states = [check_state(x) for x in X]
    if not states:
        raise ValueError("found an empty sequence of states")
    return states


def check_non_negative(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")
    return float(value)


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
