"""Sweeps over the relative detector angle, symptom analysis, and stable output.

A sweep runs one sub-experiment per grid angle and records the full tally
plus every estimator, so each published figure is a projection of one CSV
table.  Output is byte-stable: identical configs produce identical bytes.

``analyze_symptoms`` implements the detection-loophole diagnostic: if the
observed coincidence total T_obs varies with the relative angle and dips
at pi/2 (pi/4 on the polarisation circle), the missing records depend on
the hidden value; no cosine-law model does that.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml
from scipy import stats as _stats

from .bell import BellReport, TestKind, canonical_angles, simple_bell, standard_bell
from .detector import DetectionModel, setting_from_angle
from .estimators import DenominatorMode, UndefinedEstimateError, correlation
from .experiment import (
    CoincidenceTally,
    PairSource,
    SubexperimentConfig,
    run_subexperiment,
)
from .oracle import banded_probabilities, qm_probabilities
from .spaces import HvSpace

__all__ = [
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

PI = math.pi
HALF_PI = math.pi / 2.0

SCHEMA_VERSION = 1

PRESET_NAMES = ("fig9", "fig10", "fig11", "fig12", "fig13", "aspect-pi15")

CSV_COLUMNS = (
    "phi",
    "nn",
    "ns",
    "sn",
    "ss",
    "null_a",
    "null_b",
    "null_both",
    "t",
    "t_obs",
    "c_hat",
    "e_biased",
    "singles_est",
    "seed",
)

_MODE_BY_NAME = {m.value: m for m in DenominatorMode}

_MODEL_FIELDS = (
    "band_half_angle_plus",
    "band_half_angle_minus",
    "cap_half_angle",
    "fuzz_width",
    "arc_half_angle",
)


def _model_to_dict(model: DetectionModel) -> dict:
    return {name: getattr(model, name) for name in _MODEL_FIELDS}


def _model_from_dict(d: dict) -> DetectionModel:
    unknown = set(d) - set(_MODEL_FIELDS)
    if unknown:
        raise ValueError(f"unknown detection-model fields: {sorted(unknown)}")
    return DetectionModel(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one angle sweep; hashable to a stable config id."""

    space: HvSpace
    model_a: DetectionModel = field(default_factory=DetectionModel)
    model_b: DetectionModel = field(default_factory=DetectionModel)
    smear_half_angle: float = 0.0
    phi_start: float = 0.0
    phi_stop: float = PI
    phi_step: float = PI / 16.0
    t_per_point: int = 100_000
    seed: int = 0
    modes: tuple[DenominatorMode, ...] = (
        DenominatorMode.EMITTED_T,
        DenominatorMode.OBSERVED_TOBS,
        DenominatorMode.SINGLES,
    )
    reference: str = "lrm"
    efficiency: float = 1.0

    def __post_init__(self):
        if self.phi_step <= 0.0:
            raise ValueError("phi_step must be > 0")
        if self.phi_stop < self.phi_start:
            raise ValueError("phi_stop must be >= phi_start")
        limit = PI if self.space is HvSpace.SPHERE else HALF_PI
        if self.phi_start < 0.0 or self.phi_stop > limit + 1e-12:
            raise ValueError(f"phi grid must lie within [0, {limit!r}]")
        if self.t_per_point < 1:
            raise ValueError("t_per_point must be >= 1")
        if self.reference not in ("lrm", "qm"):
            raise ValueError("reference must be 'lrm' or 'qm'")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")

    def phi_grid(self) -> list[float]:
        n = int(math.floor((self.phi_stop - self.phi_start) / self.phi_step + 1e-9))
        return [self.phi_start + k * self.phi_step for k in range(n + 1)]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "space": self.space.value,
            "reference": self.reference,
            "efficiency": self.efficiency,
            "t_per_point": self.t_per_point,
            "seed": self.seed,
            "phi_grid": {
                "start": self.phi_start,
                "stop": self.phi_stop,
                "step": self.phi_step,
            },
            "source": {"smear_half_angle": self.smear_half_angle},
            "model_a": _model_to_dict(self.model_a),
            "model_b": _model_to_dict(self.model_b),
            "modes": [m.value for m in self.modes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version!r}")
        grid = d.pop("phi_grid", {})
        source = d.pop("source", {})
        unknown_source = set(source) - {"smear_half_angle"}
        if unknown_source:
            raise ValueError(f"unknown source fields: {sorted(unknown_source)}")
        try:
            space = HvSpace(d.pop("space"))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"invalid or missing space: {exc}") from exc
        modes = tuple(
            _MODE_BY_NAME[m] for m in d.pop("modes", [m.value for m in DenominatorMode])
        )
        kwargs = {
            "space": space,
            "model_a": _model_from_dict(d.pop("model_a", {})),
            "model_b": _model_from_dict(d.pop("model_b", {})),
            "smear_half_angle": float(source.get("smear_half_angle", 0.0)),
            "modes": modes,
            "reference": d.pop("reference", "lrm"),
            "efficiency": float(d.pop("efficiency", 1.0)),
        }
        for key, cast in (("t_per_point", int), ("seed", int)):
            if key in d:
                kwargs[key] = cast(d.pop(key))
        if space is HvSpace.CIRCLE and "stop" not in grid:
            kwargs["phi_stop"] = HALF_PI
        for src, dst in (("start", "phi_start"), ("stop", "phi_stop"), ("step", "phi_step")):
            if src in grid:
                kwargs[dst] = float(grid[src])
        if d:
            raise ValueError(f"unknown config fields: {sorted(d)}")
        return cls(**kwargs)

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SweepRecord:
    """One grid point: tally, estimators, and provenance."""

    phi: float
    tally: CoincidenceTally
    c_hat: float | None
    e_biased: float | None
    singles_est: float | None
    config_hash: str
    seed: int

    @property
    def t_obs(self):
        return self.tally.t_obs

    def to_row(self) -> list:
        tly = self.tally
        return [
            self.phi,
            tly.nn,
            tly.ns,
            tly.sn,
            tly.ss,
            tly.null_a_only,
            tly.null_b_only,
            tly.null_both,
            tly.t,
            self.t_obs,
            self.c_hat,
            self.e_biased,
            self.singles_est,
            self.seed,
        ]

    def to_dict(self) -> dict:
        return dict(zip(CSV_COLUMNS, self.to_row())) | {"config_hash": self.config_hash}


def _apportion_counts(probs: list[float], total: int) -> list[int]:
    """Integer counts proportional to probs, summing exactly to total."""
    raw = [p * total for p in probs]
    counts = [int(math.floor(r)) for r in raw]
    short = total - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (raw[i] - counts[i], i), reverse=True)
    for i in order[:short]:
        counts[i] += 1
    return counts


def _qm_reference_tally(config: SweepConfig, phi: float) -> CoincidenceTally:
    p = qm_probabilities(config.space, phi, config.efficiency)
    counts = _apportion_counts(
        [p.p_nn, p.p_ns, p.p_sn, p.p_ss, p.p_null_a_only, p.p_null_b_only, p.p_null_both],
        config.t_per_point,
    )
    return CoincidenceTally(*counts, t=config.t_per_point)


def _estimate(tally: CoincidenceTally, mode: DenominatorMode) -> float | None:
    try:
        return correlation(tally, mode)
    except UndefinedEstimateError:
        return None


def run_sweep(config: SweepConfig) -> list[SweepRecord]:
    """One record per grid angle, deterministic for a fixed config.

    Grid point i uses stream index i of the master seed, so points are
    independent and the result does not depend on evaluation order.
    """
    chash = config.config_hash()
    source = PairSource(config.space, config.smear_half_angle)
    records = []
    for i, phi in enumerate(config.phi_grid()):
        if config.reference == "qm":
            tally = _qm_reference_tally(config, phi)
        else:
            sub = SubexperimentConfig(
                setting_a=setting_from_angle(config.space, 0.0),
                setting_b=setting_from_angle(config.space, phi),
                model_a=config.model_a,
                model_b=config.model_b,
                source=source,
                t=config.t_per_point,
                seed=config.seed,
            )
            tally = run_subexperiment(sub, stream_index=i)
        records.append(
            SweepRecord(
                phi=phi,
                tally=tally,
                c_hat=_estimate(tally, DenominatorMode.EMITTED_T),
                e_biased=_estimate(tally, DenominatorMode.OBSERVED_TOBS),
                singles_est=_estimate(tally, DenominatorMode.SINGLES),
                config_hash=chash,
                seed=config.seed,
            )
        )
    return records


# ---------------------------------------------------------------------------
# symptom analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymptomReport:
    """Binomial test of T_obs constancy across the angle grid."""

    n_points: int
    min_phi: float
    target_phi: float
    grid_step: float
    statistic: float
    p_value: float
    alpha: float
    tobs_varies: bool
    symptom_detected: bool
    constant_tobs: bool

    def to_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "min_phi": self.min_phi,
            "target_phi": self.target_phi,
            "grid_step": self.grid_step,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "tobs_varies": self.tobs_varies,
            "symptom_detected": self.symptom_detected,
            "constant_tobs": self.constant_tobs,
        }


def analyze_symptoms(
    records: list[SweepRecord], space: HvSpace, alpha: float = 0.01
) -> SymptomReport:
    """Locate the T_obs minimum and test it against constant detection.

    Pools the grid into a common detection rate, computes the binomial
    chi-square statistic for departure from constancy, and flags the
    hidden-variable symptom when the variation is significant at ``alpha``
    and the minimum sits at the right angle (pi/2, or pi/4 on the circle)
    to within one grid step.
    """
    if len(records) < 5:
        raise ValueError("need at least 5 grid points")
    phis = np.array([r.phi for r in records])
    if phis[0] > 1e-2 or phis[-1] < HALF_PI - 1e-2:
        raise ValueError("grid must span [0, pi/2]")
    tobs = np.array([float(r.t_obs) for r in records])
    totals = np.array([float(r.tally.t) for r in records])
    pooled = tobs.sum() / totals.sum()
    expected = totals * pooled
    variance = totals * pooled * (1.0 - pooled)
    if np.all(variance == 0.0):
        statistic, p_value = 0.0, 1.0
    else:
        statistic = float(np.sum((tobs - expected) ** 2 / np.where(variance == 0, 1, variance)))
        p_value = float(_stats.chi2.sf(statistic, len(records) - 1))
    rates = tobs / totals
    min_idx = int(np.argmin(rates))
    min_phi = float(phis[min_idx])
    target = HALF_PI if space is HvSpace.SPHERE else PI / 4.0
    step = float(np.median(np.diff(phis))) if len(phis) > 1 else 0.0
    varies = p_value < alpha
    at_target = abs(min_phi - target) <= step + 1e-9
    return SymptomReport(
        n_points=len(records),
        min_phi=min_phi,
        target_phi=target,
        grid_step=step,
        statistic=statistic,
        p_value=p_value,
        alpha=alpha,
        tobs_varies=varies,
        symptom_detected=varies and at_target,
        constant_tobs=not varies,
    )


# ---------------------------------------------------------------------------
# end-to-end Bell runs
# ---------------------------------------------------------------------------


def _default_simple_angles(space: HvSpace) -> tuple[float, float, float]:
    if space is HvSpace.SPHERE:
        return (0.0, PI / 4.0, PI / 2.0)
    return (0.0, PI / 8.0, PI / 4.0)


def run_bell(
    space: HvSpace,
    model_a: DetectionModel,
    model_b: DetectionModel,
    test_kind: TestKind,
    mode: DenominatorMode,
    t: int = 100_000,
    seed: int = 0,
    smear_half_angle: float = 0.0,
    angles: tuple[float, ...] | None = None,
    exact: bool = False,
    resolution: int = 400,
) -> BellReport:
    """Run the 3- or 4-sub-experiment Bell test end to end.

    Monte Carlo mode gives each sub-experiment its own stream index of the
    master seed (separately conducted runs).  Exact mode evaluates the same
    statistic on oracle expected tallies instead.
    """
    if test_kind is TestKind.SIMPLE:
        a, b, c = angles if angles is not None else _default_simple_angles(space)
        pairs = [(a, b), (b, c), (a, c)]
    else:
        a, a2, b, b2 = angles if angles is not None else canonical_angles(space)
        pairs = [(a, b), (a, b2), (a2, b), (a2, b2)]
    source = PairSource(space, smear_half_angle)
    tallies = []
    for i, (x, y) in enumerate(pairs):
        sa = setting_from_angle(space, x)
        sb = setting_from_angle(space, y)
        if exact:
            from .detector import relative_angle

            probs = banded_probabilities(
                space, relative_angle(sa, sb), model_a, model_b,
                smear=smear_half_angle, resolution=resolution,
            )
            tallies.append(probs.expected_tally(1.0))
        else:
            sub = SubexperimentConfig(
                setting_a=sa, setting_b=sb, model_a=model_a, model_b=model_b,
                source=source, t=t, seed=seed,
            )
            tallies.append(run_subexperiment(sub, stream_index=i))
    if test_kind is TestKind.SIMPLE:
        return simple_bell(*tallies, mode=mode, exact=exact)
    return standard_bell(*tallies, mode=mode, exact=exact)


# ---------------------------------------------------------------------------
# stable emission and config files
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(records: list[SweepRecord], fileobj) -> None:
    """Emit the fixed-column CSV table; byte-stable for a given config."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(v) for v in rec.to_row()])


def records_csv_string(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    write_records_csv(records, buf)
    return buf.getvalue()


def write_records_json(records: list[SweepRecord], config: SweepConfig, fileobj) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "records": [r.to_dict() for r in records],
    }
    json.dump(payload, fileobj, indent=2, sort_keys=True, allow_nan=False)
    fileobj.write("\n")


def load_config(path) -> SweepConfig:
    """Load a sweep config from a YAML document."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a mapping")
    return SweepConfig.from_dict(data)


def preset_dict(name: str) -> dict:
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    text = resources.files("eprsim").joinpath(f"presets/{name}.yaml").read_text()
    return yaml.safe_load(text)


def load_preset(name: str) -> SweepConfig:
    """Load one of the bundled figure presets by name."""
    return SweepConfig.from_dict(preset_dict(name))
