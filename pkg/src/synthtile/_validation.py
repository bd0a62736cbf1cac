"""Input validation helpers shared by the metric, filter and adaptation code."""
from __future__ import annotations

import numpy as np

from .exceptions import EmptyRaster, ShapeMismatch


def check_raster(a, name="raster", dtype=np.float64, ndim=2, allow_empty=False):
    """Return ``a`` as an ndarray of ``dtype`` with ``ndim`` dimensions."""
    arr = np.asarray(a, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise EmptyRaster(f"{name} is empty")
    return arr


def check_same_shape(*arrays, names=None):
    shapes = [np.shape(a) for a in arrays]
    if any(s != shapes[0] for s in shapes[1:]):
        names = names or [f"arg{i}" for i in range(len(arrays))]
        desc = ", ".join(f"{n}={s}" for n, s in zip(names, shapes))
        raise ShapeMismatch(f"shape mismatch: {desc}")


def check_binary(mask, name="mask"):
    m = np.asarray(mask)
    if m.dtype == bool:
        return m
    if not np.isin(m, (0, 1)).all():
        raise ValueError(f"{name} must be binary (0/1)")
    return m.astype(bool)


def check_fraction(x, name, low_open=False, high_open=False):
    x = float(x)
    lo_ok = x > 0 if low_open else x >= 0
    hi_ok = x < 1 if high_open else x <= 1
    if not (lo_ok and hi_ok):
        lo = "(" if low_open else "["
        hi = ")" if high_open else "]"
        raise ValueError(f"{name} must lie in {lo}0, 1{hi}, got {x}")
    return x
