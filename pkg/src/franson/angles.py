"""Circular-phase helpers shared by every module."""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_phase(x):
    """Map ``x`` onto the half-open interval [-pi, pi).

    Works elementwise on arrays. Rounding can land one ulp outside the
    interval; such results are snapped to -pi so the half-open contract
    holds in floating point too.
    """
    arr = np.asarray(x, dtype=float)
    out = arr - TWO_PI * np.floor((arr + np.pi) / TWO_PI)
    out = np.where(out >= np.pi, out - TWO_PI, out)
    out = np.where(out < -np.pi, -np.pi, out)
    if out.ndim == 0:
        return float(out)
    return out


def circular_distance(a, b):
    """Absolute angular separation of ``a`` and ``b`` on the circle, in [0, pi]."""
    return np.abs(wrap_phase(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
