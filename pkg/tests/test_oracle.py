import math

import numpy as np
import pytest

from eprsim import (
    CategoryProbabilities,
    DenominatorMode,
    DetectionModel,
    HvSpace,
    PairSource,
    SubexperimentConfig,
    appendix_bias,
    aspect_preset_report,
    banded_probabilities,
    detect,
    ideal_probabilities,
    null_fraction,
    qm_correlation,
    qm_probabilities,
    quadrature_grid,
    run_subexperiment,
    setting_from_angle,
)
from eprsim.detector import DetectorSetting, Outcome

PI = math.pi
IDEAL = DetectionModel.ideal()

T_MODE = DenominatorMode.EMITTED_T
TOBS_MODE = DenominatorMode.OBSERVED_TOBS


def test_ideal_probabilities_endpoints():
    assert ideal_probabilities(HvSpace.SPHERE, 0.0).correlation(T_MODE) == pytest.approx(1.0)
    mid = ideal_probabilities(HvSpace.SPHERE, PI / 2)
    assert (mid.p_nn, mid.p_ns, mid.p_sn, mid.p_ss) == (0.25,) * 4
    assert mid.correlation(T_MODE) == pytest.approx(0.0)
    assert ideal_probabilities(HvSpace.SPHERE, PI).correlation(T_MODE) == pytest.approx(-1.0)


def test_ideal_circle_quarter_turn_uncorrelated():
    probs = ideal_probabilities(HvSpace.CIRCLE, PI / 4)
    assert probs.correlation(T_MODE) == pytest.approx(0.0, abs=1e-12)


def test_ideal_circle_confirmed_by_grid_quadrature():
    # independent oracle: classify a deterministic angle grid at both stations
    phi = PI / 4
    setting_a = DetectorSetting(HvSpace.CIRCLE, 0.0)
    setting_b = DetectorSetting(HvSpace.CIRCLE, phi)
    counts = {"nn": 0.0, "ns": 0.0, "sn": 0.0, "ss": 0.0}
    for hv, w in quadrature_grid(HvSpace.CIRCLE, 20_000):
        a = detect(IDEAL, setting_a, hv)
        b = detect(IDEAL, setting_b, hv)
        key = ("n" if a is Outcome.PLUS else "s") + ("n" if b is Outcome.PLUS else "s")
        counts[key] += w
    probs = ideal_probabilities(HvSpace.CIRCLE, phi)
    for key, expected in (("nn", probs.p_nn), ("ns", probs.p_ns),
                          ("sn", probs.p_sn), ("ss", probs.p_ss)):
        assert abs(counts[key] - expected) < 1e-3


def test_ideal_probabilities_range_validation():
    with pytest.raises(ValueError):
        ideal_probabilities(HvSpace.SPHERE, -0.1)
    with pytest.raises(ValueError):
        ideal_probabilities(HvSpace.SPHERE, PI + 0.1)
    with pytest.raises(ValueError):
        ideal_probabilities(HvSpace.CIRCLE, PI / 2 + 0.1)


def test_banded_reduces_to_ideal():
    for space, phi in ((HvSpace.SPHERE, 1.1), (HvSpace.CIRCLE, 0.6)):
        banded = banded_probabilities(space, phi, IDEAL, IDEAL)
        ideal = ideal_probabilities(space, phi)
        for field in ("p_nn", "p_ns", "p_sn", "p_ss"):
            assert abs(getattr(banded, field) - getattr(ideal, field)) < 1e-8


def test_banded_resolution_validation():
    with pytest.raises(ValueError):
        banded_probabilities(HvSpace.SPHERE, 0.5, IDEAL, IDEAL, resolution=50)
    with pytest.raises(ValueError):
        banded_probabilities(HvSpace.SPHERE, 3.5, IDEAL, IDEAL)


def test_one_sided_arcs_null_constant_in_phi():
    model = DetectionModel(arc_half_angle=PI / 15)
    for phi in (0.0, 0.3, PI / 4, 1.2, PI / 2):
        probs = banded_probabilities(HvSpace.CIRCLE, phi, model, IDEAL)
        total_null = probs.p_null_a_only + probs.p_null_b_only + probs.p_null_both
        assert total_null == pytest.approx(4.0 / 15.0, abs=1e-12)
        assert total_null == pytest.approx(
            null_fraction(model, HvSpace.CIRCLE), abs=1e-12
        )


def test_band_overlap_symptom_in_observed_fraction():
    model = DetectionModel.symmetric_bands(math.asin(0.2))
    at_zero = banded_probabilities(HvSpace.SPHERE, 0.0, model, model)
    at_right = banded_probabilities(HvSpace.SPHERE, PI / 2, model, model)
    assert at_right.t_obs_fraction < at_zero.t_obs_fraction - 0.05


def test_appendix_bias_values():
    assert appendix_bias(3.0, 1.0, 0.5) == pytest.approx(2.0 / 3.0)
    assert appendix_bias(3.0, 1.0, 0.0) == pytest.approx(0.5)
    x, y = 3 * PI / 4, PI / 4
    assert appendix_bias(x, y, 0.0) == pytest.approx(0.5)


def test_appendix_bias_preconditions():
    with pytest.raises(ValueError):
        appendix_bias(1.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        appendix_bias(2.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        appendix_bias(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        appendix_bias(2.0, 1.0, -0.1)


def test_appendix_identity_exact_on_circle():
    # constant-trim geometry: every category loses exactly 2*arc/pi
    delta = PI / 20
    model = DetectionModel(arc_half_angle=delta)
    for phi in (2.5 * delta, PI / 8, PI / 3, PI / 2 - 2.5 * delta):
        banded = banded_probabilities(HvSpace.CIRCLE, phi, model, model)
        ideal = ideal_probabilities(HvSpace.CIRCLE, phi)
        x, y = max(ideal.p_nn, ideal.p_ns), min(ideal.p_nn, ideal.p_ns)
        trim = 2.0 * delta / PI
        expected = appendix_bias(x, y, trim)
        observed = abs(banded.correlation(TOBS_MODE))
        assert observed == pytest.approx(expected, abs=1e-6)
        # subtractive trims leave the emitted-pair numerator unchanged
        assert banded.correlation(T_MODE) == pytest.approx(
            ideal.correlation(T_MODE), abs=1e-12
        )


def test_appendix_identity_exact_on_sphere_at_right_angle():
    model = DetectionModel.symmetric_bands(math.asin(0.25))
    banded = banded_probabilities(HvSpace.SPHERE, PI / 2, model, model)
    assert banded.correlation(TOBS_MODE) == pytest.approx(0.0, abs=1e-9)
    assert banded.p_nn == pytest.approx(banded.p_ns, abs=1e-9)


def test_appendix_identity_approximate_on_sphere():
    # constant-trim subtraction is only approximate away from pi/2; the
    # error scales like sin(delta)^2 / tan(phi)
    for s in (0.05, 0.1):
        for phi in (PI / 3, PI / 2.5):
            model = DetectionModel.symmetric_bands(math.asin(s))
            banded = banded_probabilities(HvSpace.SPHERE, phi, model, model)
            ideal = ideal_probabilities(HvSpace.SPHERE, phi)
            trim = (ideal.t_obs_fraction - banded.t_obs_fraction) / 4.0
            expected = appendix_bias(ideal.p_nn, ideal.p_ns, trim)
            tol = 3.0 * s * s / math.tan(phi) + 1e-9
            assert abs(banded.correlation(TOBS_MODE) - expected) < tol


def test_bias_monotone_in_band_width():
    phi = PI / 3
    values = []
    for s in (0.02, 0.05, 0.1, 0.15, 0.2):
        model = DetectionModel.symmetric_bands(math.asin(s))
        values.append(
            banded_probabilities(HvSpace.SPHERE, phi, model, model).correlation(TOBS_MODE)
        )
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    assert values[-1] > ideal_probabilities(HvSpace.SPHERE, phi).correlation(T_MODE)


def test_qm_reference_curves():
    assert qm_correlation(0.0) == 1.0
    assert qm_correlation(PI / 2) == pytest.approx(0.0, abs=1e-12)
    assert qm_correlation(PI / 8, HvSpace.CIRCLE) == pytest.approx(math.cos(PI / 4))


def test_qm_probabilities_even_padding():
    for phi in (0.0, 0.7, 2.0):
        p = qm_probabilities(HvSpace.SPHERE, phi, efficiency=0.8)
        assert p.t_obs_fraction == pytest.approx(0.64, abs=1e-12)
        assert p.correlation(TOBS_MODE) == pytest.approx(qm_correlation(phi), abs=1e-12)


def test_aspect_preset_exact_values():
    rep = aspect_preset_report()
    assert rep.report.statistic == pytest.approx(30.0 / 11.0, abs=1e-9)
    assert rep.report.violated
    assert rep.t_obs_fraction == pytest.approx(11.0 / 15.0, abs=1e-12)
    for probs in rep.probabilities:
        assert probs.t_obs_fraction == pytest.approx(11.0 / 15.0, abs=1e-12)
    assert rep.report_emitted_t.statistic == pytest.approx(2.0, abs=1e-9)
    assert not rep.report_emitted_t.violated


MC_MATRIX = [
    (HvSpace.SPHERE, 1.1, IDEAL, IDEAL, 0.0),
    (HvSpace.SPHERE, 0.6,
     DetectionModel(band_half_angle_plus=math.asin(0.25),
                    band_half_angle_minus=math.asin(0.15)), IDEAL, 0.0),
    (HvSpace.SPHERE, 2.0,
     DetectionModel.symmetric_bands(math.asin(0.3)),
     DetectionModel(cap_half_angle=0.4), 0.0),
    (HvSpace.SPHERE, 0.9,
     DetectionModel.symmetric_bands(0.15, fuzz_width=0.3), IDEAL, 0.0),
    (HvSpace.SPHERE, 1.2,
     DetectionModel.symmetric_bands(math.asin(0.2)), IDEAL, 0.5),
    (HvSpace.CIRCLE, 0.5, DetectionModel(arc_half_angle=PI / 15), IDEAL, 0.0),
    (HvSpace.CIRCLE, 0.8, DetectionModel(arc_half_angle=0.25),
     DetectionModel(arc_half_angle=0.1), 0.3),
]


@pytest.mark.parametrize("space,phi,model_a,model_b,smear", MC_MATRIX)
def test_oracle_matches_monte_carlo(space, phi, model_a, model_b, smear):
    t = 1_000_000
    probs = banded_probabilities(space, phi, model_a, model_b, smear=smear)
    config = SubexperimentConfig(
        setting_a=setting_from_angle(space, 0.0),
        setting_b=setting_from_angle(space, phi),
        model_a=model_a, model_b=model_b,
        source=PairSource(space, smear), t=t, seed=20260810,
    )
    tally = run_subexperiment(config)
    pairs = [
        (tally.nn, probs.p_nn), (tally.ns, probs.p_ns),
        (tally.sn, probs.p_sn), (tally.ss, probs.p_ss),
        (tally.null_a_only, probs.p_null_a_only),
        (tally.null_b_only, probs.p_null_b_only),
        (tally.null_both, probs.p_null_both),
    ]
    for count, p in pairs:
        se = math.sqrt(max(p * (1.0 - p), 1e-12) / t)
        assert abs(count / t - p) < 4.0 * se + 1e-9


def test_oracle_resolution_stability():
    cases = [
        (HvSpace.SPHERE, 0.9, DetectionModel.symmetric_bands(0.2, fuzz_width=0.15),
         IDEAL, 0.0),
        (HvSpace.SPHERE, 1.3, DetectionModel.symmetric_bands(math.asin(0.2)),
         DetectionModel.symmetric_bands(math.asin(0.2)), 0.4),
        (HvSpace.CIRCLE, 0.7, DetectionModel(arc_half_angle=0.2), IDEAL, 0.25),
    ]
    for space, phi, model_a, model_b, smear in cases:
        lo = banded_probabilities(space, phi, model_a, model_b, smear=smear,
                                  resolution=800)
        hi = banded_probabilities(space, phi, model_a, model_b, smear=smear,
                                  resolution=1600)
        for field in ("p_nn", "p_ns", "p_sn", "p_ss",
                      "p_null_a_only", "p_null_b_only", "p_null_both"):
            assert abs(getattr(lo, field) - getattr(hi, field)) < 1e-4


def test_category_probabilities_validation():
    with pytest.raises(ValueError):
        CategoryProbabilities(0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        CategoryProbabilities(-0.2, 0.4, 0.4, 0.4, 0.0, 0.0, 0.0)


def test_expected_tally_scales():
    probs = ideal_probabilities(HvSpace.SPHERE, PI / 4)
    tally = probs.expected_tally(1000.0)
    assert tally.t == 1000.0
    assert tally.nn == pytest.approx(probs.p_nn * 1000.0)
    assert tally.t_obs == pytest.approx(1000.0)
