"""Lattice value noise and fractional Brownian motion, evaluated at arbitrary points.

Lattice values come from an integer hash of (ix, iy, seed) so noise can be
sampled anywhere without allocating a lattice, and is identical across
platforms.
"""
from __future__ import annotations

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_PX = np.uint64(0x9E3779B97F4A7C15)
_PY = np.uint64(0xC2B2AE3D27D4EB4F)


def _mix(z):
    # splitmix64 finalizer
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def lattice_values(ix, iy, seed):
    """Uniform [0, 1) value for each integer lattice point."""
    with np.errstate(over="ignore"):
        ux = ix.astype(np.int64).view(np.uint64)
        uy = iy.astype(np.int64).view(np.uint64)
        h = _mix(ux * _PX ^ _mix(uy * _PY ^ np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _fade(t):
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def value_noise(x, y, seed=0):
    """Smooth value noise in [0, 1] at points ``(x, y)`` in lattice units."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = _fade(x - x0)
    fy = _fade(y - y0)
    ix = x0.astype(np.int64)
    iy = y0.astype(np.int64)
    v00 = lattice_values(ix, iy, seed)
    v10 = lattice_values(ix + 1, iy, seed)
    v01 = lattice_values(ix, iy + 1, seed)
    v11 = lattice_values(ix + 1, iy + 1, seed)
    a = v00 + fx * (v10 - v00)
    b = v01 + fx * (v11 - v01)
    return a + fy * (b - a)


def fbm(x, y, seed=0, octaves=6, lacunarity=2.0, gain=0.5, scale=1.0):
    """Fractional Brownian motion normalized to [0, 1].

    ``scale`` is the wavelength of the first octave in the units of ``x``/``y``.
    """
    x = np.asarray(x, dtype=np.float64) / scale
    y = np.asarray(y, dtype=np.float64) / scale
    total = np.zeros(np.broadcast(x, y).shape)
    amp = 1.0
    freq = 1.0
    norm = 0.0
    for k in range(octaves):
        total += amp * value_noise(x * freq, y * freq, seed=(seed + 7919 * k) & 0xFFFFFFFFFFFFFFFF)
        norm += amp
        amp *= gain
        freq *= lacunarity
    return total / norm
