"""Left/middle/right region signals from a dense flow field."""

from __future__ import annotations

from fractions import Fraction
from dataclasses import dataclass

import numpy as np

from .flow import FlowField

UNIVERSE_MAX = 10.0
TRIM = 3


class RegionSizeError(ValueError):
    pass


@dataclass(frozen=True)
class RegionFlow:
    raw_l: float
    raw_m: float
    raw_r: float
    l: float
    m: float
    r: float
    l_minus_r: float
    l_plus_r: float


def segment(flow: FlowField):
    """Split flow magnitudes into left, middle and right column thirds."""
    w = flow.u.shape[1]
    if w < 3:
        raise RegionSizeError("flow field must be at least 3 columns wide")
    mag = flow.magnitude
    a, b = w // 3, (2 * w) // 3
    return mag[:, :a].ravel(), mag[:, a:b].ravel(), mag[:, b:].ravel()


def trimmed_mean(mags) -> float:
    """Mean after dropping the three largest and three smallest values.

    The mean is exact up to a single final rounding, so it does not depend
    on summation order.
    """
    values = np.sort(np.asarray(mags, dtype=np.float64).ravel())
    if values.size < 2 * TRIM + 1:
        raise RegionSizeError(f"region has {values.size} samples; at least {2 * TRIM + 1} needed")
    return _exact_mean(values[TRIM:-TRIM])


def _exact_mean(values: np.ndarray) -> float:
    """Correctly rounded arithmetic mean (integer mantissa sum, one rounding)."""
    mant, exp = np.frexp(values)
    mant = np.ldexp(mant, 53).astype(np.int64)
    exp = exp.astype(np.int64) - 53
    emin = int(exp.min())
    total = 0
    for e in np.unique(exp):
        total += sum(mant[exp == e].tolist()) << int(e - emin)
    return float(Fraction(total, values.size) * Fraction(2) ** emin)


def scale(raw: float, scale_factor: float, signed: bool = False) -> float:
    if not scale_factor > 0:
        raise ValueError("scale_factor must be positive")
    lo = -UNIVERSE_MAX if signed else 0.0
    return min(max(raw * scale_factor, lo), UNIVERSE_MAX)


def aggregate(flow: FlowField, scale_factor: float) -> RegionFlow:
    """Trimmed region means, scaled onto the controller universes.

    ``l_plus_r`` is the scaled average of the two sides so it shares the
    [0, 10] universe with the individual sides.
    """
    left, middle, right = segment(flow)
    raw_l, raw_m, raw_r = trimmed_mean(left), trimmed_mean(middle), trimmed_mean(right)
    return RegionFlow(
        raw_l=raw_l,
        raw_m=raw_m,
        raw_r=raw_r,
        l=scale(raw_l, scale_factor),
        m=scale(raw_m, scale_factor),
        r=scale(raw_r, scale_factor),
        l_minus_r=scale(raw_l - raw_r, scale_factor, signed=True),
        l_plus_r=scale((raw_l + raw_r) / 2, scale_factor),
    )
