"""Input validation helpers shared by the estimators."""
import numpy as np


def check_complex_array(x, *, trailing_shape=None, name="input", min_ndim=1) -> np.ndarray:
    """Convert to a finite complex ndarray and check its trailing dimensions."""
    arr = np.asarray(x)
    if arr.dtype == object:
        raise TypeError(f"{name} must be numeric")
    arr = arr.astype(complex, copy=False)
    if arr.ndim < min_ndim:
        raise ValueError(f"{name} must have at least {min_ndim} dimensions, got {arr.ndim}")
    if trailing_shape is not None:
        trailing_shape = tuple(trailing_shape)
        if arr.shape[arr.ndim - len(trailing_shape) :] != trailing_shape:
            raise ValueError(f"{name} must end with shape {trailing_shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def check_positive(value, name, *, strict=True) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "positive" if strict else "non-negative"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value
