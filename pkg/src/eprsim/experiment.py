"""Pair emission, two-station measurement, and coincidence tallying.

One sub-experiment fixes both detector settings and models, emits T hidden
variable pairs, classifies each pair independently at stations A and B,
and tallies the nine outcome combinations into seven categories: the four
coincidence categories NN, NS, SN, SS plus three null categories (A only,
B only, both).

The pair loop is vectorised and counter-based: pair i consumes the i-th
fixed-size block of uniforms from a single keyed stream, so results are
bit-reproducible for a given (config, stream_index) regardless of internal
chunking, and disjoint stream indices can be merged for parallel runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .detector import (
    DetectionModel,
    DetectorSetting,
    _classify_circle,
    _classify_sphere,
    relative_angle,
)
from .spaces import TWO_PI, HiddenVariable, HvSpace, RandomStream

__all__ = [
    "PairSource",
    "SubexperimentConfig",
    "CoincidenceTally",
    "emit_pair",
    "run_subexperiment",
    "simulate_pair_outcomes",
    "merge",
]

_CHUNK = 1 << 18  # pairs per internal chunk; invisible in the results

# Per-pair uniform block: lamA primary, lamA azimuth, smear primary,
# smear azimuth, A fuzz draw, B fuzz draw.  The layout is fixed so that
# station draws use disjoint columns and the block count never depends on
# the data.
_DRAWS_PER_PAIR = 6


@dataclass(frozen=True)
class PairSource:
    """Source of hidden-variable pairs.

    ``smear_half_angle`` (rho) controls pair correlation: 0 emits identical
    values; otherwise the partner value is uniform within the spherical cap
    (or circular interval) of half-angle rho centred on the first value.
    """

    space: HvSpace
    smear_half_angle: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.smear_half_angle <= math.pi:
            raise ValueError("smear_half_angle must be in [0, pi]")


@dataclass(frozen=True)
class CoincidenceTally:
    """Counts of the seven outcome categories for T emitted pairs.

    Counts are integers for simulated tallies; oracle-expected tallies may
    carry float counts.  The category sum always equals t.
    """

    nn: int | float = 0
    ns: int | float = 0
    sn: int | float = 0
    ss: int | float = 0
    null_a_only: int | float = 0
    null_b_only: int | float = 0
    null_both: int | float = 0
    t: int | float = 0

    def __post_init__(self):
        total = (
            self.nn + self.ns + self.sn + self.ss
            + self.null_a_only + self.null_b_only + self.null_both
        )
        tol = 1e-9 * max(1.0, abs(self.t))
        if abs(total - self.t) > tol:
            raise ValueError(f"category counts sum to {total}, expected t = {self.t}")

    @property
    def t_obs(self):
        """Observed coincidence count NN + SS + NS + SN."""
        return self.nn + self.ns + self.sn + self.ss

    @classmethod
    def zero(cls) -> "CoincidenceTally":
        return cls()


def merge(t1: CoincidenceTally, t2: CoincidenceTally) -> CoincidenceTally:
    """Fieldwise sum; commutative and associative with ``CoincidenceTally.zero()``."""
    return CoincidenceTally(
        nn=t1.nn + t2.nn,
        ns=t1.ns + t2.ns,
        sn=t1.sn + t2.sn,
        ss=t1.ss + t2.ss,
        null_a_only=t1.null_a_only + t2.null_a_only,
        null_b_only=t1.null_b_only + t2.null_b_only,
        null_both=t1.null_both + t2.null_both,
        t=t1.t + t2.t,
    )


@dataclass(frozen=True)
class SubexperimentConfig:
    """Everything needed to run one sub-experiment reproducibly."""

    setting_a: DetectorSetting
    setting_b: DetectorSetting
    model_a: DetectionModel
    model_b: DetectionModel
    source: PairSource
    t: int
    seed: int

    def __post_init__(self):
        if self.setting_a.space is not self.setting_b.space:
            raise ValueError("settings live in different spaces")
        if self.source.space is not self.setting_a.space:
            raise ValueError("source and settings live in different spaces")
        if self.t < 1:
            raise ValueError("t must be >= 1")

    @property
    def phi(self) -> float:
        """Relative angle between the two settings (derived, for reporting)."""
        return relative_angle(self.setting_a, self.setting_b)

    def with_settings(
        self, setting_a: DetectorSetting, setting_b: DetectorSetting
    ) -> "SubexperimentConfig":
        return replace(self, setting_a=setting_a, setting_b=setting_b)


def _orthonormal_frame(vecs: np.ndarray):
    """Per-row unit vectors e1, e2 orthogonal to each row of ``vecs``."""
    ref = np.zeros_like(vecs)
    near_pole = np.abs(vecs[:, 2]) > 0.9
    ref[near_pole, 0] = 1.0
    ref[~near_pole, 2] = 1.0
    e1 = np.cross(vecs, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(vecs, e1)
    return e1, e2


def _sphere_from_zpsi(z: np.ndarray, psi: np.ndarray) -> np.ndarray:
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([r * np.cos(psi), r * np.sin(psi), z])


def _smear_sphere(lam_a: np.ndarray, rho: float, u_c: np.ndarray, u_beta: np.ndarray):
    """Partner values uniform in the cap of half-angle rho around each lam_a."""
    cos_rho = math.cos(rho)
    c = 1.0 - u_c * (1.0 - cos_rho)  # uniform on [cos rho, 1]
    beta = TWO_PI * u_beta
    s = np.sqrt(np.clip(1.0 - c * c, 0.0, None))
    e1, e2 = _orthonormal_frame(lam_a)
    return (
        c[:, None] * lam_a
        + s[:, None] * (np.cos(beta)[:, None] * e1 + np.sin(beta)[:, None] * e2)
    )


def emit_pair(
    source: PairSource, stream: RandomStream
) -> tuple[HiddenVariable, HiddenVariable]:
    """Emit one correlated pair (lam_a, lam_b).

    lam_a is uniform on the space.  With smear_half_angle 0 the partner is
    identical; otherwise it is uniform within the cap/interval of that
    half-angle centred on lam_a.
    """
    gen = stream.generator
    if source.space is HvSpace.SPHERE:
        z = 2.0 * gen.random() - 1.0
        psi = TWO_PI * gen.random()
        lam_a = _sphere_from_zpsi(np.array([z]), np.array([psi]))
        if source.smear_half_angle > 0.0:
            lam_b = _smear_sphere(
                lam_a, source.smear_half_angle, gen.random(1), gen.random(1)
            )
        else:
            lam_b = lam_a
        return (
            HiddenVariable(source.space, lam_a[0]),
            HiddenVariable(source.space, lam_b[0] / np.linalg.norm(lam_b[0])),
        )
    angle_a = TWO_PI * gen.random()
    if source.smear_half_angle > 0.0:
        offset = (2.0 * gen.random() - 1.0) * source.smear_half_angle
        angle_b = (angle_a + offset) % TWO_PI
    else:
        angle_b = angle_a
    return HiddenVariable(source.space, angle_a), HiddenVariable(source.space, angle_b)


def _outcome_chunk(config: SubexperimentConfig, u: np.ndarray):
    """Classify one chunk of per-pair uniform blocks; returns (codes_a, codes_b)."""
    space = config.source.space
    rho = config.source.smear_half_angle
    if space is HvSpace.SPHERE:
        z = 2.0 * u[:, 0] - 1.0
        psi = TWO_PI * u[:, 1]
        lam_a = _sphere_from_zpsi(z, psi)
        if rho > 0.0:
            lam_b = _smear_sphere(lam_a, rho, u[:, 2], u[:, 3])
        else:
            lam_b = lam_a
        proj_a = lam_a @ config.setting_a.direction
        proj_b = lam_b @ config.setting_b.direction
        codes_a = _classify_sphere(config.model_a, proj_a, u[:, 4])
        codes_b = _classify_sphere(config.model_b, proj_b, u[:, 5])
    else:
        lam_a = TWO_PI * u[:, 0]
        if rho > 0.0:
            lam_b = lam_a + (2.0 * u[:, 2] - 1.0) * rho
        else:
            lam_b = lam_a
        codes_a = _classify_circle(config.model_a, (lam_a - config.setting_a.direction) % math.pi)
        codes_b = _classify_circle(config.model_b, (lam_b - config.setting_b.direction) % math.pi)
    return codes_a, codes_b


def simulate_pair_outcomes(config: SubexperimentConfig, stream_index: int = 0):
    """Outcome codes (+1/-1/0) for every pair at both stations.

    Returns (codes_a, codes_b) int8 arrays of length config.t.  Needs
    O(t) memory; prefer :func:`run_subexperiment` for tallies only.
    """
    stream = RandomStream(config.seed, stream_index)
    gen = stream.generator
    codes_a = np.empty(config.t, dtype=np.int8)
    codes_b = np.empty(config.t, dtype=np.int8)
    done = 0
    while done < config.t:
        n = min(_CHUNK, config.t - done)
        u = gen.random((n, _DRAWS_PER_PAIR))
        ca, cb = _outcome_chunk(config, u)
        codes_a[done : done + n] = ca
        codes_b[done : done + n] = cb
        done += n
    return codes_a, codes_b


def _tally_codes(codes_a: np.ndarray, codes_b: np.ndarray) -> CoincidenceTally:
    a_null = codes_a == 0
    b_null = codes_b == 0
    both = ~a_null & ~b_null
    a_plus = codes_a == 1
    b_plus = codes_b == 1
    return CoincidenceTally(
        nn=int(np.count_nonzero(both & a_plus & b_plus)),
        ns=int(np.count_nonzero(both & a_plus & ~b_plus)),
        sn=int(np.count_nonzero(both & ~a_plus & b_plus)),
        ss=int(np.count_nonzero(both & ~a_plus & ~b_plus)),
        null_a_only=int(np.count_nonzero(a_null & ~b_null)),
        null_b_only=int(np.count_nonzero(b_null & ~a_null)),
        null_both=int(np.count_nonzero(a_null & b_null)),
        t=codes_a.size,
    )


def run_subexperiment(
    config: SubexperimentConfig, stream_index: int = 0
) -> CoincidenceTally:
    """Simulate T pairs and tally the outcome categories.

    A pure function of (config, stream_index): results are bit-reproducible
    and independent of internal chunking.  Parallel callers should split T
    across distinct stream indices and :func:`merge` the tallies.
    """
    stream = RandomStream(config.seed, stream_index)
    gen = stream.generator
    total = CoincidenceTally.zero()
    done = 0
    while done < config.t:
        n = min(_CHUNK, config.t - done)
        u = gen.random((n, _DRAWS_PER_PAIR))
        ca, cb = _outcome_chunk(config, u)
        total = merge(total, _tally_codes(ca, cb))
        done += n
    return total
