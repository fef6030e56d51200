"""Deterministic ground truth for category probabilities and Bell statistics.

Where the geometry is tractable the probabilities are closed forms (ideal
detectors; anything on the circle, which reduces to exact interval
arithmetic).  Sphere models with missing bands/caps/fuzz are integrated
numerically: the azimuthal average of each station's piecewise-linear
detection probability has a closed form, leaving a one-dimensional
adaptive quadrature over the polar projection, with integrand breakpoints
supplied analytically.  Imperfectly correlated sources add a tabulated
cap-average layer.

Also houses the subtraction-bias algebra ((x - d) - (y - d)) /
((x - d) + (y - d)) = (x - y)/(x + y - 2d) and the quantum cosine
reference curves used for comparison plots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .bell import BellReport, canonical_angles, standard_bell
from .detector import (
    DetectionModel,
    _circle_station_sets,
    _plus_minus_segments,
)
from .experiment import CoincidenceTally
from .estimators import DenominatorMode
from .spaces import HvSpace

__all__ = [
    "CategoryProbabilities",
    "ideal_probabilities",
    "banded_probabilities",
    "appendix_bias",
    "qm_correlation",
    "qm_probabilities",
    "aspect_preset_report",
    "AspectPresetReport",
]

PI = math.pi
HALF_PI = math.pi / 2.0

MIN_RESOLUTION = 100

_SUM_TOL = 1e-10


@dataclass(frozen=True)
class CategoryProbabilities:
    """Exact per-pair probabilities of the seven outcome categories."""

    p_nn: float
    p_ns: float
    p_sn: float
    p_ss: float
    p_null_a_only: float
    p_null_b_only: float
    p_null_both: float

    def __post_init__(self):
        vals = self._as_tuple()
        if min(vals) < -_SUM_TOL:
            raise ValueError(f"negative category probability: {vals}")
        total = sum(vals)
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"category probabilities sum to {total!r}, expected 1")

    def _as_tuple(self):
        return (
            self.p_nn,
            self.p_ns,
            self.p_sn,
            self.p_ss,
            self.p_null_a_only,
            self.p_null_b_only,
            self.p_null_both,
        )

    @property
    def t_obs_fraction(self) -> float:
        """Expected T_obs / T."""
        return self.p_nn + self.p_ns + self.p_sn + self.p_ss

    def expected_tally(self, t: float = 1.0) -> CoincidenceTally:
        """Expected (float-count) tally for t emitted pairs."""
        return CoincidenceTally(
            nn=self.p_nn * t,
            ns=self.p_ns * t,
            sn=self.p_sn * t,
            ss=self.p_ss * t,
            null_a_only=self.p_null_a_only * t,
            null_b_only=self.p_null_b_only * t,
            null_both=self.p_null_both * t,
            t=t,
        )

    def correlation(self, mode: DenominatorMode) -> float:
        """Population correlation under the given denominator convention."""
        from .estimators import correlation

        return correlation(self.expected_tally(1.0), mode)


def ideal_probabilities(space: HvSpace, phi: float) -> CategoryProbabilities:
    """Category probabilities for ideal detectors and a perfectly correlated source.

    Sphere: NS and SN each occupy the lune fraction phi / (2*pi); NN and SS
    the complementary (pi - phi) / (2*pi).  Circle: NS = SN = phi / pi,
    NN = SS = (pi/2 - phi) / pi for phi in [0, pi/2].
    """
    if space is HvSpace.SPHERE:
        if not 0.0 <= phi <= PI + 1e-12:
            raise ValueError("phi must be in [0, pi] for the sphere")
        p_ns = phi / (2.0 * PI)
        p_nn = (PI - phi) / (2.0 * PI)
    else:
        if not 0.0 <= phi <= HALF_PI + 1e-12:
            raise ValueError("phi must be in [0, pi/2] for the circle")
        p_ns = phi / PI
        p_nn = (HALF_PI - phi) / PI
    return CategoryProbabilities(p_nn, p_ns, p_ns, p_nn, 0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# sphere path: closed-form azimuthal averages + 1-D adaptive quadrature
# ---------------------------------------------------------------------------


def _seg_eval_array(segments, x):
    """Evaluate a piecewise-linear segment list at array x (0 outside)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    for lo, hi, flo, fhi in segments:
        width = hi - lo
        inside = (x >= lo) & (x < hi)
        if width > 0.0:
            out = np.where(inside, flo + (fhi - flo) * (x - lo) / width, out)
        # top boundary belongs to the last segment that reaches it
        out = np.where(x == hi, fhi, out)
    return out


def _beta_avg_array(segments, mu, A):
    """(1/2*pi) * integral of f(mu + A*cos(theta)) d(theta) over a full turn.

    Exact for piecewise-linear f; mu and A broadcast.
    """
    mu = np.asarray(mu, dtype=float)
    A = np.asarray(A, dtype=float)
    mu, A = np.broadcast_arrays(mu, A)
    out = np.zeros(mu.shape)
    degenerate = A < 1e-14
    safe_A = np.where(degenerate, 1.0, A)
    for lo, hi, flo, fhi in segments:
        c1 = np.clip((lo - mu) / safe_A, -1.0, 1.0)
        c2 = np.clip((hi - mu) / safe_A, -1.0, 1.0)
        beta = (fhi - flo) / (hi - lo) if hi > lo else 0.0
        alpha = flo - beta * lo
        th_hi = np.arccos(c1)  # theta where the argument enters at lo
        th_lo = np.arccos(c2)
        sin_hi = np.sqrt(np.clip(1.0 - c1 * c1, 0.0, None))
        sin_lo = np.sqrt(np.clip(1.0 - c2 * c2, 0.0, None))
        contrib = (alpha + beta * mu) * (th_hi - th_lo) + beta * A * (sin_hi - sin_lo)
        out += np.where(degenerate, 0.0, contrib)
    out /= PI
    if np.any(degenerate):
        out = np.where(degenerate, _seg_eval_array(segments, mu), out)
    return out


class _SphereStation:
    """One station's outcome-probability functions over u = lam . direction."""

    def __init__(self, model: DetectionModel):
        self.plus, self.minus = _plus_minus_segments(model)
        self.ideal = model.is_ideal

    def segments(self, which: int):
        return self.plus if which == 1 else self.minus

    def eval(self, which: int, u):
        if which == 0:
            return (
                1.0
                - _seg_eval_array(self.plus, u)
                - _seg_eval_array(self.minus, u)
            )
        return _seg_eval_array(self.segments(which), u)

    def beta_avg(self, which: int, mu, A):
        if which == 0:
            return (
                1.0
                - _beta_avg_array(self.plus, mu, A)
                - _beta_avg_array(self.minus, mu, A)
            )
        return _beta_avg_array(self.segments(which), mu, A)

    def edges(self):
        pts = set()
        for lo, hi, _, _ in self.plus + self.minus:
            pts.add(lo)
            pts.add(hi)
        return pts

    def is_zero(self, which: int) -> bool:
        """Whether the outcome probability function is identically zero."""
        if which == 0:
            return self.ideal
        return not self.segments(which)


def _mapped_breakpoints(edges, phi):
    """u values where mu(u) +/- A(u) crosses a partner threshold t."""
    pts = set()
    cphi, sphi = math.cos(phi), math.sin(phi)
    for t in edges:
        if abs(t) > 1.0:
            continue
        root = math.sqrt(max(0.0, 1.0 - t * t))
        for u in (t * cphi + sphi * root, t * cphi - sphi * root):
            if -1.0 < u < 1.0:
                pts.add(u)
    return pts


class _SmearedPartner:
    """Cap-averaged partner-station probabilities, tabulated over w = lam_a . b."""

    def __init__(self, station: _SphereStation, rho: float, resolution: int):
        m = 4 * resolution + 1
        n_c = min(max(100, resolution // 2), 600)
        self.n_theta = max(256, resolution)
        self.w_grid = np.linspace(-1.0, 1.0, m)
        x, wgt = np.polynomial.legendre.leggauss(n_c)
        cos_rho = math.cos(rho)
        c = 0.5 * (x + 1.0) * (1.0 - cos_rho) + cos_rho  # nodes on [cos rho, 1]
        wgt = wgt * 0.5  # normalised weights for the uniform cap measure
        W = self.w_grid[:, None]
        mu = W * c[None, :]
        A = np.sqrt(np.clip(1.0 - W * W, 0.0, None)) * np.sqrt(
            np.clip(1.0 - c * c, 0.0, None)
        )[None, :]
        self.g_plus = _beta_avg_array(station.plus, mu, A) @ wgt
        self.g_minus = _beta_avg_array(station.minus, mu, A) @ wgt

    def table(self, which: int):
        if which == 1:
            return self.g_plus
        if which == -1:
            return self.g_minus
        return 1.0 - self.g_plus - self.g_minus

    def theta_avg(self, which: int, u: float, phi: float):
        theta = (np.arange(self.n_theta) + 0.5) * (2.0 * PI / self.n_theta)
        w = u * math.cos(phi) + math.sin(phi) * math.sqrt(
            max(0.0, 1.0 - u * u)
        ) * np.cos(theta)
        return float(np.mean(np.interp(w, self.w_grid, self.table(which))))


def _sphere_category_probs(model_a, model_b, phi, smear, resolution):
    st_a = _SphereStation(model_a)
    st_b = _SphereStation(model_b)
    cphi, sphi = math.cos(phi), math.sin(phi)
    points = sorted(st_a.edges() | _mapped_breakpoints(st_b.edges(), phi))
    points = [p for p in points if -1.0 < p < 1.0]
    partner = _SmearedPartner(st_b, smear, resolution) if smear > 0.0 else None

    def prob(which_a: int, which_b: int) -> float:
        if st_a.is_zero(which_a) or st_b.is_zero(which_b):
            return 0.0
        if partner is None:

            def integrand(u):
                fa = float(st_a.eval(which_a, u))
                if fa == 0.0:
                    return 0.0
                mu = u * cphi
                A = abs(sphi) * math.sqrt(max(0.0, 1.0 - u * u))
                return fa * float(st_b.beta_avg(which_b, mu, A))

            epsabs = 1e-12
        else:

            def integrand(u):
                fa = float(st_a.eval(which_a, u))
                if fa == 0.0:
                    return 0.0
                return fa * partner.theta_avg(which_b, u, phi)

            epsabs = 1e-9
        # full_output silences the roundoff warning on kinked integrands;
        # accuracy is checked via the category-sum residual below
        result = quad(
            integrand,
            -1.0,
            1.0,
            points=points,
            limit=max(200, 20 * (len(points) + 1)),
            epsabs=epsabs,
            epsrel=1e-10,
            full_output=True,
        )
        return 0.5 * result[0]

    raw = {(x, y): prob(x, y) for x in (1, -1, 0) for y in (1, -1, 0)}
    total = sum(raw.values())
    if abs(total - 1.0) > 1e-7:
        raise ArithmeticError(f"oracle categories sum to {total!r}; integration failed")
    scale = 1.0 / total
    return {k: v * scale for k, v in raw.items()}


# ---------------------------------------------------------------------------
# circle path: exact interval arithmetic on the period-pi analyser circle
# ---------------------------------------------------------------------------


def _shift_mod_pi(intervals, offset):
    out = []
    for lo, hi in intervals:
        width = hi - lo
        start = (lo + offset) % PI
        end = start + width
        if end <= PI:
            out.append((start, end))
        else:
            out.append((start, PI))
            out.append((0.0, end - PI))
    return sorted(out)


def _overlap_length(xs, ys) -> float:
    total = 0.0
    for alo, ahi in xs:
        for blo, bhi in ys:
            lo, hi = max(alo, blo), min(ahi, bhi)
            if hi > lo:
                total += hi - lo
    return total


def _intervals_measure(xs) -> float:
    return sum(hi - lo for lo, hi in xs)


def _arc_overlap(ys, start: float, length: float) -> float:
    """Overlap of ys with the arc [start, start + length) on the period-pi circle."""
    start %= PI
    if start + length <= PI:
        return _overlap_length(ys, [(start, start + length)])
    return _overlap_length(ys, [(start, PI), (0.0, start + length - PI)])


def _box_average(ys, lam: float, rho: float) -> float:
    """Mean of the pi-periodic indicator of ys over [lam - rho, lam + rho]."""
    width = 2.0 * rho
    k = math.floor(width / PI)
    rem = width - k * PI
    total = k * _intervals_measure(ys) + _arc_overlap(ys, lam - rho, rem)
    return total / width


def _circle_category_probs(model_a, model_b, phi, smear):
    sets_a = {k: v for k, v in _circle_station_sets(model_a).items()}
    sets_b_raw = _circle_station_sets(model_b)
    sets_b = {k: _shift_mod_pi(v, phi) for k, v in sets_b_raw.items()}
    out = {}
    if smear == 0.0:
        for x, xs in sets_a.items():
            for y, ys in sets_b.items():
                out[(x, y)] = _overlap_length(xs, ys) / PI
        return out
    # partner-side box smoothing: piecewise linear, integrated exactly
    breakpoints = set()
    for ys in sets_b.values():
        for lo, hi in ys:
            for b in (lo, hi):
                breakpoints.add((b + smear) % PI)
                breakpoints.add((b - smear) % PI)
                rem = (2.0 * smear) % PI
                breakpoints.add((b + smear - rem) % PI)
                breakpoints.add((b - smear + rem) % PI)
    for x, xs in sets_a.items():
        for y, ys in sets_b.items():
            total = 0.0
            for lo, hi in xs:
                cuts = sorted({lo, hi} | {b for b in breakpoints if lo < b < hi})
                for p, q in zip(cuts[:-1], cuts[1:]):
                    total += 0.5 * (
                        _box_average(ys, p, smear) + _box_average(ys, q, smear)
                    ) * (q - p)
            out[(x, y)] = total / PI
    return out


def banded_probabilities(
    space: HvSpace,
    phi: float,
    model_a: DetectionModel,
    model_b: DetectionModel,
    smear: float = 0.0,
    resolution: int = 400,
) -> CategoryProbabilities:
    """Exact category probabilities under arbitrary detection models.

    ``smear`` is the source's cap half-angle (0 = perfectly correlated).
    ``resolution`` controls the tabulation and averaging grids used on the
    smeared-sphere path; hard geometry is integrated adaptively (sphere) or
    exactly (circle), so results there are resolution-independent.
    """
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}")
    if not 0.0 <= smear <= PI:
        raise ValueError("smear must be in [0, pi]")
    if space is HvSpace.SPHERE:
        if not 0.0 <= phi <= PI + 1e-12:
            raise ValueError("phi must be in [0, pi] for the sphere")
        raw = _sphere_category_probs(model_a, model_b, phi, smear, resolution)
    else:
        if not 0.0 <= phi <= HALF_PI + 1e-12:
            raise ValueError("phi must be in [0, pi/2] for the circle")
        raw = _circle_category_probs(model_a, model_b, phi, smear)
    return CategoryProbabilities(
        p_nn=raw[(1, 1)],
        p_ns=raw[(1, -1)],
        p_sn=raw[(-1, 1)],
        p_ss=raw[(-1, -1)],
        p_null_a_only=raw[(0, 1)] + raw[(0, -1)],
        p_null_b_only=raw[(1, 0)] + raw[(-1, 0)],
        p_null_both=raw[(0, 0)],
    )


def appendix_bias(x: float, y: float, delta: float) -> float:
    """Biased correlation (x - y) / (x + y - 2*delta) after subtracting a
    constant delta from each of the two area measures."""
    if not (x >= y >= delta >= 0.0):
        raise ValueError("requires x >= y >= delta >= 0")
    if x + y - 2.0 * delta <= 0.0:
        raise ValueError("requires x + y - 2*delta > 0")
    return (x - y) / (x + y - 2.0 * delta)


def qm_correlation(phi: float, space: HvSpace = HvSpace.SPHERE) -> float:
    """Quantum reference correlation: cos(phi) (sphere), cos(2*phi) (circle)."""
    if space is HvSpace.SPHERE:
        return math.cos(phi)
    return math.cos(2.0 * phi)


def qm_probabilities(
    space: HvSpace, phi: float, efficiency: float = 1.0
) -> CategoryProbabilities:
    """Quantum reference category probabilities with value-independent detection.

    Coincidence categories follow the cosine law scaled by efficiency^2;
    missing records are padded evenly, so T_obs/T is constant in phi.
    """
    if not 0.0 < efficiency <= 1.0:
        raise ValueError("efficiency must be in (0, 1]")
    c = qm_correlation(phi, space)
    eta = efficiency
    same = eta * eta * (1.0 + c) / 4.0
    diff = eta * eta * (1.0 - c) / 4.0
    return CategoryProbabilities(
        p_nn=same,
        p_ns=diff,
        p_sn=diff,
        p_ss=same,
        p_null_a_only=(1.0 - eta) * eta,
        p_null_b_only=eta * (1.0 - eta),
        p_null_both=(1.0 - eta) ** 2,
    )


ASPECT_ARC_HALF_ANGLE = PI / 15.0


@dataclass(frozen=True)
class AspectPresetReport:
    """Exact evaluation of the one-sided missing-arc polariser preset."""

    report: BellReport
    report_emitted_t: BellReport
    probabilities: tuple[CategoryProbabilities, ...]
    t_obs_fraction: float


def aspect_preset_report(resolution: int = 400) -> AspectPresetReport:
    """Circle model with missing arcs of half-angle pi/15 at station A only.

    Station B is ideal; angles are the canonical polarisation set.  The
    observed-coincidence fraction is 11/15 at every relative angle, the
    biased standard statistic is 30/11, and the emitted-pair statistic sits
    exactly on the classical boundary.
    """
    model_a = DetectionModel(arc_half_angle=ASPECT_ARC_HALF_ANGLE)
    model_b = DetectionModel.ideal()
    a, a2, b, b2 = canonical_angles(HvSpace.CIRCLE)
    pair_angles = [(a, b), (a, b2), (a2, b), (a2, b2)]

    def rel(x, y):
        d = abs(x - y) % PI
        return min(d, PI - d)

    probs = tuple(
        banded_probabilities(
            HvSpace.CIRCLE, rel(x, y), model_a, model_b, resolution=resolution
        )
        for x, y in pair_angles
    )
    fractions = [p.t_obs_fraction for p in probs]
    expected_fraction = 11.0 / 15.0
    if any(abs(f - expected_fraction) > 1e-9 for f in fractions):
        raise ArithmeticError(f"T_obs fractions {fractions} != 11/15")
    tallies = [p.expected_tally(1.0) for p in probs]
    report = standard_bell(*tallies, mode=DenominatorMode.OBSERVED_TOBS, exact=True)
    if abs(report.statistic - 30.0 / 11.0) > 1e-9:
        raise ArithmeticError(f"biased statistic {report.statistic} != 30/11")
    report_t = standard_bell(*tallies, mode=DenominatorMode.EMITTED_T, exact=True)
    return AspectPresetReport(
        report=report,
        report_emitted_t=report_t,
        probabilities=probs,
        t_obs_fraction=expected_fraction,
    )
