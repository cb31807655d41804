"""Input validation helpers shared by the public API."""

import numpy as np

from .exceptions import NonFinite, ShapeMismatch


def check_complex(a, name="array", ndim=None):
    """Return `a` as a complex128 ndarray, rejecting NaN/Inf entries."""
    arr = np.asarray(a, dtype=np.complex128)
    if ndim is not None and arr.ndim not in np.atleast_1d(ndim):
        raise ShapeMismatch(f"{name} must have ndim in {ndim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return arr


def check_square(a, name="matrix"):
    arr = check_complex(a, name)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise ShapeMismatch(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_llrs(llrs, name="llrs", allow_inf=True):
    """Return LLRs as float64; +/-inf is allowed as a hard-bit sentinel."""
    arr = np.asarray(llrs, dtype=np.float64)
    if np.any(np.isnan(arr)):
        raise NonFinite(f"{name} contains NaN")
    if not allow_inf and not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains Inf")
    return arr


def check_bipolar(bits, name="bits"):
    arr = np.asarray(bits)
    if arr.size and not np.all(np.abs(arr) == 1):
        raise ValueError(f"{name} must be bipolar (+1/-1)")
    return arr.astype(np.int8)


def check_same_shape(a, b, what="frames"):
    if np.shape(a) != np.shape(b):
        raise ShapeMismatch(f"{what} differ in shape: {np.shape(a)} vs {np.shape(b)}")
