"""Per-station classification of a hidden variable into Plus, Minus, or Null.

A station is a detector setting (a direction on the sphere or an analyser
angle on the circle) plus a :class:`DetectionModel` describing which hidden
values go undetected: missing bands around the discriminator (sphere),
missing polar caps (sphere), missing arcs at sector boundaries (circle),
and optionally fuzzy band edges where detection probability ramps up
linearly instead of switching.

Detection at one station depends only on the local setting, the local
model, the hidden variable, and local randomness: the two stations never
share information (factorability).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .spaces import TWO_PI, HiddenVariable, HvSpace, RandomStream

__all__ = [
    "Outcome",
    "DetectorSetting",
    "DetectionModel",
    "detect",
    "null_fraction",
    "setting_from_angle",
    "relative_angle",
]

PI = math.pi
HALF_PI = math.pi / 2.0
QUARTER_PI = math.pi / 4.0


class Outcome(Enum):
    """Station outcome: Plus is an 'N' sighting, Minus an 'S', Null no detection."""

    PLUS = 1
    MINUS = -1
    NULL = 0


@dataclass(frozen=True, eq=False)
class DetectorSetting:
    """Measurement direction: unit 3-vector (sphere) or analyser angle (circle).

    Circle angles are reduced modulo pi, since classification on the circle
    has period pi.
    """

    space: HvSpace
    direction: np.ndarray | float

    def __post_init__(self):
        if self.space is HvSpace.SPHERE:
            vec = np.asarray(self.direction, dtype=float)
            if vec.shape != (3,):
                raise ValueError("sphere setting must be a 3-vector")
            norm = float(np.linalg.norm(vec))
            if abs(norm - 1.0) > 1e-12:
                raise ValueError(f"sphere setting must be unit length, |v| = {norm!r}")
            vec.setflags(write=False)
            object.__setattr__(self, "direction", vec)
        else:
            object.__setattr__(self, "direction", float(self.direction) % PI)


def setting_from_angle(space: HvSpace, angle: float) -> DetectorSetting:
    """Setting at the given angle: in the x-z plane measured from +z (sphere),
    or the analyser angle itself (circle)."""
    if space is HvSpace.SPHERE:
        return DetectorSetting(
            space, np.array([math.sin(angle), 0.0, math.cos(angle)])
        )
    return DetectorSetting(space, angle)


def relative_angle(setting_a: DetectorSetting, setting_b: DetectorSetting) -> float:
    """Angle between two settings: in [0, pi] (sphere) or [0, pi/2] (circle)."""
    if setting_a.space is not setting_b.space:
        raise ValueError("settings live in different spaces")
    if setting_a.space is HvSpace.SPHERE:
        dot = float(np.dot(setting_a.direction, setting_b.direction))
        return math.acos(min(1.0, max(-1.0, dot)))
    d = abs(setting_a.direction - setting_b.direction) % PI
    return min(d, PI - d)


@dataclass(frozen=True)
class DetectionModel:
    """Geometry of undetected hidden values at one station.

    band_half_angle_plus / band_half_angle_minus
        Half-angles of the missing band on the Plus (N) and Minus (S) sides
        of the discriminator (sphere model).
    cap_half_angle
        Half-angle of missing polar caps around +/- the setting direction
        (sphere model).
    fuzz_width
        Width of the linear detection-probability ramp at each band edge
        (sphere model); zero means hard-edged bands.
    arc_half_angle
        Half-angle of missing arcs at the two sector boundaries
        (circle model).

    All parameters zero is the ideal detector, which never returns Null.
    """

    band_half_angle_plus: float = 0.0
    band_half_angle_minus: float = 0.0
    cap_half_angle: float = 0.0
    fuzz_width: float = 0.0
    arc_half_angle: float = 0.0

    def __post_init__(self):
        for name in (
            "band_half_angle_plus",
            "band_half_angle_minus",
            "cap_half_angle",
            "fuzz_width",
            "arc_half_angle",
        ):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.band_half_angle_plus + self.fuzz_width >= HALF_PI:
            raise ValueError("band_half_angle_plus + fuzz_width must be < pi/2")
        if self.band_half_angle_minus + self.fuzz_width >= HALF_PI:
            raise ValueError("band_half_angle_minus + fuzz_width must be < pi/2")
        if self.cap_half_angle >= HALF_PI:
            raise ValueError("cap_half_angle must be < pi/2")
        if self.arc_half_angle >= QUARTER_PI:
            raise ValueError("arc_half_angle must be < pi/4")

    @classmethod
    def ideal(cls) -> "DetectionModel":
        return cls()

    @classmethod
    def symmetric_bands(cls, half_angle: float, fuzz_width: float = 0.0) -> "DetectionModel":
        """Equal missing bands on both sides of the discriminator."""
        return cls(
            band_half_angle_plus=half_angle,
            band_half_angle_minus=half_angle,
            fuzz_width=fuzz_width,
        )

    @property
    def is_ideal(self) -> bool:
        return (
            self.band_half_angle_plus == 0.0
            and self.band_half_angle_minus == 0.0
            and self.cap_half_angle == 0.0
            and self.fuzz_width == 0.0
            and self.arc_half_angle == 0.0
        )


def _sphere_thresholds(model: DetectionModel):
    """(sin d+, sin d-, sin(d+ + w), sin(d- + w), cos cap) for the sphere rule."""
    sp = math.sin(model.band_half_angle_plus)
    sm = math.sin(model.band_half_angle_minus)
    fp = math.sin(model.band_half_angle_plus + model.fuzz_width)
    fm = math.sin(model.band_half_angle_minus + model.fuzz_width)
    cc = math.cos(model.cap_half_angle)
    return sp, sm, fp, fm, cc


def _classify_sphere(model: DetectionModel, u, fuzz_uniform=None):
    """Vectorised sphere classification from the projection u = lam . direction.

    Returns int8 codes +1 (Plus), -1 (Minus), 0 (Null).  ``fuzz_uniform``
    supplies the Bernoulli draw for ramp regions; required when
    fuzz_width > 0.
    """
    u = np.asarray(u, dtype=float)
    sp, sm, fp, fm, cc = _sphere_thresholds(model)
    out = np.where(u >= 0.0, np.int8(1), np.int8(-1))
    null = np.zeros(u.shape, dtype=bool)
    # hard bands around the discriminator
    null |= (u >= 0.0) & (u < sp)
    null |= (u < 0.0) & (u > -sm)
    if model.fuzz_width > 0.0:
        if fuzz_uniform is None:
            raise ValueError("fuzzy model needs a random stream for the ramp draw")
        fuzz_uniform = np.asarray(fuzz_uniform, dtype=float)
        p = np.ones(u.shape)
        if fp > sp:
            ramp = (u >= sp) & (u < fp)
            p = np.where(ramp, (u - sp) / (fp - sp), p)
        if fm > sm:
            ramp = (u <= -sm) & (u > -fm)
            p = np.where(ramp, (-u - sm) / (fm - sm), p)
        null |= fuzz_uniform >= p
    # missing polar caps
    null |= np.abs(u) > cc
    return np.where(null, np.int8(0), out)


def _circle_arcs_null(model: DetectionModel, theta):
    d = model.arc_half_angle
    return (np.abs(theta - QUARTER_PI) < d) | (np.abs(theta - 3 * QUARTER_PI) < d)


def _classify_circle(model: DetectionModel, theta):
    """Vectorised circle classification from theta = (lam - analyser) mod pi."""
    theta = np.asarray(theta, dtype=float)
    plus = (theta < QUARTER_PI) | (theta >= 3 * QUARTER_PI)
    out = np.where(plus, np.int8(1), np.int8(-1))
    return np.where(_circle_arcs_null(model, theta), np.int8(0), out)


_OUTCOME_BY_CODE = {1: Outcome.PLUS, -1: Outcome.MINUS, 0: Outcome.NULL}


def detect(
    model: DetectionModel,
    setting: DetectorSetting,
    lam: HiddenVariable,
    stream: RandomStream | None = None,
) -> Outcome:
    """Classify one hidden variable at one station.

    Sphere: with u = lam . direction, the candidate outcome is Plus for
    u >= 0 (ties to Plus) and Minus otherwise; Null for u inside a missing
    band or beyond a missing cap; in the fuzz ramp the detection
    probability rises linearly and ``stream`` supplies the Bernoulli draw
    (one uniform is consumed whenever fuzz_width > 0, independent of u).

    Circle: with theta = (lam - analyser) mod pi, the candidate is Plus for
    theta in [0, pi/4) or [3pi/4, pi), else Minus; Null within
    arc_half_angle of either sector boundary.
    """
    if setting.space is not lam.space:
        raise ValueError("hidden variable and setting live in different spaces")
    if setting.space is HvSpace.SPHERE:
        u = float(np.dot(lam.value, setting.direction))
        draw = None
        if model.fuzz_width > 0.0:
            if stream is None:
                raise ValueError("fuzzy model needs a random stream for the ramp draw")
            draw = stream.generator.random()
        code = int(_classify_sphere(model, u, draw))
    else:
        theta = (lam.value - setting.direction) % PI
        code = int(_classify_circle(model, theta))
    return _OUTCOME_BY_CODE[code]


def _plus_minus_segments(model: DetectionModel):
    """Piecewise-linear detection probabilities on u in [-1, 1] (sphere).

    Returns (plus_segments, minus_segments); each segment is
    (lo, hi, f(lo), f(hi)) with linear interpolation in between, and the
    probability is zero outside the listed segments.
    """
    sp, sm, fp, fm, cc = _sphere_thresholds(model)

    def one_side(s, f):
        segs = []
        if f > s:  # ramp from 0 at s to 1 at f, truncated by the cap
            hi = min(f, cc)
            if hi > s:
                segs.append((s, hi, 0.0, (hi - s) / (f - s)))
            if cc > f:
                segs.append((f, cc, 1.0, 1.0))
        elif cc > s:
            segs.append((s, cc, 1.0, 1.0))
        return segs

    plus = one_side(sp, fp)
    minus = [(-hi, -lo, fhi, flo) for (lo, hi, flo, fhi) in reversed(one_side(sm, fm))]
    return plus, minus


def _segments_integral(segments) -> float:
    """Integral over u of a piecewise-linear segment list (trapezoid, exact)."""
    return sum((hi - lo) * 0.5 * (flo + fhi) for lo, hi, flo, fhi in segments)


def _circle_station_sets(model: DetectionModel):
    """Outcome sets on the folded analyser coordinate y in [0, pi) (circle).

    Returns dict mapping +1/-1/0 to interval lists.  Intervals are
    half-open [lo, hi) with 0 <= lo < hi <= pi.
    """
    d = model.arc_half_angle
    plus = [(0.0, QUARTER_PI - d), (3 * QUARTER_PI + d, PI)]
    minus = [(QUARTER_PI + d, 3 * QUARTER_PI - d)]
    null = []
    if d > 0.0:
        null = [
            (QUARTER_PI - d, QUARTER_PI + d),
            (3 * QUARTER_PI - d, 3 * QUARTER_PI + d),
        ]
    return {
        1: [(lo, hi) for lo, hi in plus if hi > lo],
        -1: [(lo, hi) for lo, hi in minus if hi > lo],
        0: null,
    }


def null_fraction(model: DetectionModel, space: HvSpace) -> float:
    """Exact probability that ``detect`` returns Null for a uniform hidden variable.

    Sphere with hard bands: (sin d+ + sin d-)/2 + (1 - cos cap); fuzzy
    ramps add half of each ramp's width in u.  Circle: 4*arc/pi.
    """
    if space is HvSpace.CIRCLE:
        return 4.0 * model.arc_half_angle / PI
    plus, minus = _plus_minus_segments(model)
    detected = 0.5 * (_segments_integral(plus) + _segments_integral(minus))
    return 1.0 - detected
