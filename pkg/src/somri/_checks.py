"""Shared input validation helpers (internal)."""

import numpy as np

from .errors import DataIntegrityError, ShapeError


def check_complex_field(x, name="field"):
    """Validate an H x W complex field and return it as complex128.

    The returned array is always complex128; callers that preserve single
    precision cast back at their own boundary.
    """
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ShapeError(f"{name} must be at least 2x2, got {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise DataIntegrityError(f"{name} contains non-finite values")
    return arr.astype(np.complex128, copy=False)


def check_feature_map(x, name="features"):
    """Validate a C x H x W real feature map and return it as float64."""
    arr = np.asarray(x)
    if arr.ndim != 3:
        raise ShapeError(f"{name} must be C x H x W, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataIntegrityError(f"{name} contains non-finite values")
    return arr.astype(np.float64, copy=False)


def check_same_shape(a, b, name_a="a", name_b="b"):
    if np.shape(a) != np.shape(b):
        raise ShapeError(
            f"{name_a} shape {np.shape(a)} != {name_b} shape {np.shape(b)}"
        )
