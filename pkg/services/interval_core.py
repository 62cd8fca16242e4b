"""Interval construction and the exact bounds of a linear score over a box of intervals."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from models.coefficients import Coefficients
from models.interval import Interval
from utils.errors import DimensionMismatchError, InvalidArgumentError, InvalidIntervalError


def interval_make(lo: float, hi: float) -> Interval:
    """Build [lo, hi] exactly as given. Swapped bounds are a data bug and are never repaired."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidArgumentError(f"Interval endpoints must be finite, got ({lo!r}, {hi!r})")
    if lo > hi:
        raise InvalidIntervalError(lo, hi)
    return Interval(lo=lo, hi=hi)


def hull(intervals: Sequence[Interval]) -> Interval:
    if not intervals:
        raise InvalidArgumentError("hull of no intervals is undefined")
    return Interval(lo=min(iv.lo for iv in intervals), hi=max(iv.hi for iv in intervals))


def linear_score(beta: Sequence[float], x: Sequence[float]) -> float:
    """beta_0 + sum(beta_i * x_i), accumulated left to right."""
    if len(x) != len(beta) - 1:
        raise DimensionMismatchError(len(beta) - 1, len(x))
    score = beta[0]
    for b, v in zip(beta[1:], x):
        score += b * v
    return score


def linear_score_bounds(coeffs: Coefficients, x: Sequence[Interval]) -> Interval:
    """Exact range of the linear score over the box x.

    Each term's extreme sits at the endpoint picked by the sign of its coefficient.
    On degenerate boxes the result equals linear_score bit for bit.
    """
    beta = coeffs.beta
    if len(x) != len(beta) - 1:
        raise DimensionMismatchError(len(beta) - 1, len(x))
    lo = beta[0]
    hi = beta[0]
    for b, iv in zip(beta[1:], x):
        if b >= 0:
            lo += b * iv.lo
            hi += b * iv.hi
        else:
            lo += b * iv.hi
            hi += b * iv.lo
    return Interval(lo=lo, hi=hi)


def score_bounds_matrix(beta: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised linear_score_bounds for many boxes: lower/upper are (n, m), returns two (n,) arrays."""
    beta = np.asarray(beta, dtype=float)
    slopes = beta[1:]
    if lower.shape[1] != slopes.shape[0]:
        raise DimensionMismatchError(slopes.shape[0], lower.shape[1])
    positive = np.clip(slopes, 0.0, None)
    negative = np.clip(slopes, None, 0.0)
    lo = beta[0] + lower @ positive + upper @ negative
    hi = beta[0] + upper @ positive + lower @ negative
    return lo, hi
