"""Simulator and exact-oracle toolkit for EPR-type coincidence experiments
under local realistic detection models.

The package simulates two-station coincidence experiments whose outcomes
are fixed by a shared hidden variable plus local detection geometry, and
contrasts correlation estimators that divide by the emitted-pair count T
against the common practice of dividing by the observed coincidence count
T_obs.  Value-dependent detection failures (missing bands, caps, or arcs)
make the T_obs-normalised estimator exceed Bell bounds that the
T-normalised one respects.
"""
from .spaces import (
    HvSpace,
    HiddenVariable,
    RandomStream,
    sample_uniform,
    sample_uniform_array,
    quadrature_grid,
)
from .detector import (
    Outcome,
    DetectorSetting,
    DetectionModel,
    detect,
    null_fraction,
    setting_from_angle,
    relative_angle,
)
from .experiment import (
    PairSource,
    SubexperimentConfig,
    CoincidenceTally,
    emit_pair,
    run_subexperiment,
    simulate_pair_outcomes,
    merge,
)
from .estimators import (
    DenominatorMode,
    UndefinedEstimateError,
    correlation,
    pair_probability,
    t_obs,
    singles_a,
    singles_b,
)
from .bell import TestKind, BellReport, simple_bell, standard_bell, canonical_angles
from .oracle import (
    CategoryProbabilities,
    ideal_probabilities,
    banded_probabilities,
    appendix_bias,
    qm_correlation,
    qm_probabilities,
    aspect_preset_report,
    AspectPresetReport,
)
from .sweep import (
    SweepConfig,
    SweepRecord,
    SymptomReport,
    run_sweep,
    analyze_symptoms,
    run_bell,
    write_records_csv,
    write_records_json,
    load_config,
    load_preset,
    PRESET_NAMES,
)

__version__ = "0.1.0"

__all__ = [
    "HvSpace",
    "HiddenVariable",
    "RandomStream",
    "sample_uniform",
    "sample_uniform_array",
    "quadrature_grid",
    "Outcome",
    "DetectorSetting",
    "DetectionModel",
    "detect",
    "null_fraction",
    "setting_from_angle",
    "relative_angle",
    "PairSource",
    "SubexperimentConfig",
    "CoincidenceTally",
    "emit_pair",
    "run_subexperiment",
    "simulate_pair_outcomes",
    "merge",
    "DenominatorMode",
    "UndefinedEstimateError",
    "correlation",
    "pair_probability",
    "t_obs",
    "singles_a",
    "singles_b",
    "TestKind",
    "BellReport",
    "simple_bell",
    "standard_bell",
    "canonical_angles",
    "CategoryProbabilities",
    "ideal_probabilities",
    "banded_probabilities",
    "appendix_bias",
    "qm_correlation",
    "qm_probabilities",
    "aspect_preset_report",
    "AspectPresetReport",
    "SweepConfig",
    "SweepRecord",
    "SymptomReport",
    "run_sweep",
    "analyze_symptoms",
    "run_bell",
    "write_records_csv",
    "write_records_json",
    "load_config",
    "load_preset",
    "PRESET_NAMES",
]
