"""Correlation and pair-probability estimators under three denominator conventions.

The numerator is always NN + SS - NS - SN (or a single category count).
The denominator is the contested quantity:

* ``EMITTED_T`` divides by the emitted-pair count T (unbiased),
* ``OBSERVED_TOBS`` divides by the observed coincidence count
  T_obs = NN + SS + NS + SN (the convention used in practice, biased
  whenever detection failures depend on the hidden value),
* ``SINGLES`` divides by the geometric mean of the two stations' non-null
  counts (a non-canonical middle ground; see README).
"""
from __future__ import annotations

import math
from enum import Enum

from .experiment import CoincidenceTally

__all__ = [
    "DenominatorMode",
    "UndefinedEstimateError",
    "correlation",
    "pair_probability",
    "t_obs",
    "singles_a",
    "singles_b",
]

CATEGORIES = ("nn", "ns", "sn", "ss")


class DenominatorMode(Enum):
    EMITTED_T = "t"
    OBSERVED_TOBS = "tobs"
    SINGLES = "singles"


class UndefinedEstimateError(ArithmeticError):
    """Raised when the chosen denominator is zero (no usable events)."""


def t_obs(tally: CoincidenceTally) -> int:
    """Observed coincidence count NN + SS + NS + SN."""
    return tally.nn + tally.ns + tally.sn + tally.ss


def singles_a(tally: CoincidenceTally):
    """Non-null count at station A, irrespective of station B."""
    return tally.t - tally.null_a_only - tally.null_both


def singles_b(tally: CoincidenceTally):
    """Non-null count at station B, irrespective of station A."""
    return tally.t - tally.null_b_only - tally.null_both


def _denominator(tally: CoincidenceTally, mode: DenominatorMode) -> float:
    if mode is DenominatorMode.EMITTED_T:
        d = tally.t
    elif mode is DenominatorMode.OBSERVED_TOBS:
        d = t_obs(tally)
    else:
        d = math.sqrt(singles_a(tally) * singles_b(tally))
    if d <= 0:
        raise UndefinedEstimateError(
            f"denominator for mode {mode.value!r} is zero; estimate undefined"
        )
    return d


def correlation(tally: CoincidenceTally, mode: DenominatorMode) -> float:
    """(NN + SS - NS - SN) / D for the chosen denominator D."""
    num = tally.nn + tally.ss - tally.ns - tally.sn
    return num / _denominator(tally, mode)


def pair_probability(
    tally: CoincidenceTally, category: str, mode: DenominatorMode
) -> float:
    """Single category count / D, for category in {"nn", "ns", "sn", "ss"}."""
    cat = category.lower()
    if cat not in CATEGORIES:
        raise ValueError(f"category must be one of {CATEGORIES}, got {category!r}")
    return getattr(tally, cat) / _denominator(tally, mode)


def correlation_stderr(tally: CoincidenceTally, mode: DenominatorMode) -> float:
    """Approximate standard error of :func:`correlation` on a simulated tally.

    EMITTED_T treats each pair as a +1/-1/0 draw; the other modes use the
    delta-method binomial approximation (1 - C^2) / D.
    """
    d = _denominator(tally, mode)
    c = correlation(tally, mode)
    if mode is DenominatorMode.EMITTED_T:
        var = max(0.0, t_obs(tally) / tally.t - c * c) / tally.t
    else:
        var = max(0.0, 1.0 - c * c) / d
    return math.sqrt(var)


def pair_probability_stderr(
    tally: CoincidenceTally, category: str, mode: DenominatorMode
) -> float:
    """Binomial standard error of :func:`pair_probability`."""
    d = _denominator(tally, mode)
    p = pair_probability(tally, category, mode)
    return math.sqrt(max(0.0, p * (1.0 - p)) / d)
