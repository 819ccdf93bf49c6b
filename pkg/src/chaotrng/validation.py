"""Input checks shared by the estimator-style wrappers."""
from __future__ import annotations

import numbers

import numpy as np

from .bitstream import BitStream

__all__ = ["check_bits", "check_probability", "check_positive_int", "as_like"]


def check_bits(X, *, min_length: int = 0, name: str = "bits") -> np.ndarray:
    """Return ``X`` as a 1-D ``uint8`` array of zeros and ones.

    Accepts a :class:`BitStream`, any 1-D array-like, or a single-column 2-D
    array (the shape scikit-learn pipelines hand to transformers).
    """
    if isinstance(X, BitStream):
        arr = X.to_array()
    else:
        arr = np.asarray(X)
        if arr.ndim == 2 and 1 in arr.shape:
            arr = arr.ravel()
        if arr.ndim != 1:
            raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
        if arr.dtype == bool:
            arr = arr.astype(np.uint8)
        elif arr.size:
            if not np.issubdtype(arr.dtype, np.number):
                raise ValueError(f"{name} must be numeric 0/1 values")
            if not np.all((arr == 0) | (arr == 1)):
                raise ValueError(f"{name} may only contain 0 and 1")
        arr = arr.astype(np.uint8, copy=False)
    if arr.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} values, got {arr.size}")
    return arr


def as_like(bits: np.ndarray, template, **meta):
    """Wrap ``bits`` back into a BitStream when the input was one."""
    if isinstance(template, BitStream):
        return BitStream.from_bits(bits, {**template.meta, **meta})
    return bits


def check_probability(p: float, name: str, *, open_interval: bool = True) -> float:
    p = float(p)
    ok = 0.0 < p < 1.0 if open_interval else 0.0 <= p <= 1.0
    if not ok:
        raise ValueError(f"{name} must lie in {'(0, 1)' if open_interval else '[0, 1]'}, got {p}")
    return p


def check_positive_int(v, name: str, *, minimum: int = 1) -> int:
    if isinstance(v, bool) or not isinstance(v, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {v!r}")
    if v < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {v}")
    return int(v)
