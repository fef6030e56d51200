"""Command-line interface: simulate sweeps, run Bell tests, query the oracle,
and analyze sweep output for the hidden-variable symptom.

Exit codes: 0 success, 2 invalid configuration, 3 at least one undefined
estimate was encountered (rows are still emitted, with nan estimates).
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from .bell import TestKind
from .detector import DetectionModel
from .estimators import DenominatorMode, UndefinedEstimateError
from .experiment import CoincidenceTally
from .oracle import banded_probabilities
from .spaces import HvSpace
from .sweep import (
    CSV_COLUMNS,
    PRESET_NAMES,
    SweepConfig,
    SweepRecord,
    analyze_symptoms,
    preset_dict,
    run_bell,
    run_sweep,
    write_records_csv,
    write_records_json,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNDEFINED = 3


class ConfigError(Exception):
    pass


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    for station in ("a", "b"):
        grp = parser.add_argument_group(f"detection model {station.upper()}")
        grp.add_argument(f"--band-{station}", type=float, metavar="RAD",
                         help=f"missing-band half-angle on both sides at station {station.upper()}")
        grp.add_argument(f"--band-plus-{station}", type=float, metavar="RAD")
        grp.add_argument(f"--band-minus-{station}", type=float, metavar="RAD")
        grp.add_argument(f"--cap-{station}", type=float, metavar="RAD")
        grp.add_argument(f"--fuzz-{station}", type=float, metavar="RAD")
        grp.add_argument(f"--arc-{station}", type=float, metavar="RAD")


def _add_common_flags(parser: argparse.ArgumentParser, grid: bool = True) -> None:
    parser.add_argument("--space", choices=["sphere", "circle"])
    parser.add_argument("--preset", choices=PRESET_NAMES,
                        help="start from a bundled preset")
    parser.add_argument("--config", metavar="FILE",
                        help="YAML config; overrides flags")
    parser.add_argument("--t", type=int, metavar="N", help="emitted pairs per run")
    parser.add_argument("--seed", type=int, metavar="INT")
    parser.add_argument("--smear", type=float, metavar="RAD",
                        help="source cap half-angle (0 = perfectly correlated)")
    if grid:
        parser.add_argument("--phi-start", type=float, metavar="RAD")
        parser.add_argument("--phi-stop", type=float, metavar="RAD")
        parser.add_argument("--phi-step", type=float, metavar="RAD")
    _add_model_flags(parser)
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--output", default="-", metavar="FILE",
                        help="output path ('-' for stdout)")


def _flag_overlay(args: argparse.Namespace) -> dict:
    """Config-dict fragment from whichever flags were given."""
    overlay: dict = {}
    if args.space:
        overlay["space"] = args.space
    if getattr(args, "t", None) is not None:
        overlay["t_per_point"] = args.t
    if args.seed is not None:
        overlay["seed"] = args.seed
    if args.smear is not None:
        overlay["source"] = {"smear_half_angle": args.smear}
    grid = {}
    for key, name in (("start", "phi_start"), ("stop", "phi_stop"), ("step", "phi_step")):
        val = getattr(args, name, None)
        if val is not None:
            grid[key] = val
    if grid:
        overlay["phi_grid"] = grid
    for station in ("a", "b"):
        model = {}
        both = getattr(args, f"band_{station}")
        if both is not None:
            model["band_half_angle_plus"] = both
            model["band_half_angle_minus"] = both
        for flag, field in (
            (f"band_plus_{station}", "band_half_angle_plus"),
            (f"band_minus_{station}", "band_half_angle_minus"),
            (f"cap_{station}", "cap_half_angle"),
            (f"fuzz_{station}", "fuzz_width"),
            (f"arc_{station}", "arc_half_angle"),
        ):
            val = getattr(args, flag)
            if val is not None:
                model[field] = val
        if model:
            overlay[f"model_{station}"] = model
    return overlay


def _merge_section(base: dict, overlay: dict) -> dict:
    out = dict(base)
    for key, val in overlay.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **val}
        else:
            out[key] = val
    return out


def _build_config(args: argparse.Namespace, require_space: bool = True) -> SweepConfig:
    """Assemble the effective config: defaults, then flags, then preset,
    then an explicit config file (later sources win)."""
    merged: dict = {}
    merged = _merge_section(merged, _flag_overlay(args))
    if args.preset:
        merged = _merge_section(merged, preset_dict(args.preset))
    if args.config:
        import yaml

        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        merged = _merge_section(merged, data)
    if "space" not in merged:
        if require_space:
            raise ConfigError("no space given: pass --space, --preset, or --config")
        merged["space"] = "sphere"
    try:
        return SweepConfig.from_dict(merged)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _open_output(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit(text_writer, path: str) -> None:
    out, close = _open_output(path)
    try:
        text_writer(out)
    finally:
        if close:
            out.close()


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _build_config(args)
    records = run_sweep(config)
    if args.format == "csv":
        _emit(lambda fh: write_records_csv(records, fh), args.output)
    else:
        _emit(lambda fh: write_records_json(records, config, fh), args.output)
    undefined = any(
        r.c_hat is None or r.e_biased is None or r.singles_est is None for r in records
    )
    return EXIT_UNDEFINED if undefined else EXIT_OK


def _cmd_bell(args: argparse.Namespace) -> int:
    config = _build_config(args)
    angles = None
    if args.angles:
        angles = tuple(float(x) for x in args.angles.split(","))
        expected = 3 if args.test == "simple" else 4
        if len(angles) != expected:
            raise ConfigError(f"--angles needs {expected} comma-separated values")
    try:
        report = run_bell(
            space=config.space,
            model_a=config.model_a,
            model_b=config.model_b,
            test_kind=TestKind(args.test),
            mode=DenominatorMode(args.mode),
            t=config.t_per_point,
            seed=config.seed,
            smear_half_angle=config.smear_half_angle,
            angles=angles,
            exact=args.exact,
        )
    except UndefinedEstimateError as exc:
        print(f"undefined estimate: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    payload = report.to_dict()
    if report.mode is DenominatorMode.SINGLES:
        payload["singles_denominator"] = "geometric mean of station singles (non-canonical)"
    _emit(lambda fh: (json.dump(payload, fh, indent=2, sort_keys=True), fh.write("\n")),
          args.output)
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    config = _build_config(args)
    phis = [args.phi] if args.phi is not None else config.phi_grid()
    rows = []
    for phi in phis:
        p = banded_probabilities(
            config.space, phi, config.model_a, config.model_b,
            smear=config.smear_half_angle, resolution=args.resolution,
        )
        row = {
            "phi": phi,
            "p_nn": p.p_nn, "p_ns": p.p_ns, "p_sn": p.p_sn, "p_ss": p.p_ss,
            "p_null_a_only": p.p_null_a_only,
            "p_null_b_only": p.p_null_b_only,
            "p_null_both": p.p_null_both,
            "t_obs_fraction": p.t_obs_fraction,
        }
        for mode in DenominatorMode:
            try:
                row[f"corr_{mode.value}"] = p.correlation(mode)
            except UndefinedEstimateError:
                row[f"corr_{mode.value}"] = None
        rows.append(row)
    if args.format == "json":
        _emit(lambda fh: (json.dump(rows, fh, indent=2, sort_keys=True), fh.write("\n")),
              args.output)
    else:
        import csv as _csv

        def write(fh):
            writer = _csv.writer(fh, lineterminator="\n")
            writer.writerow(rows[0].keys())
            for row in rows:
                writer.writerow(
                    [repr(v) if isinstance(v, float) else ("nan" if v is None else v)
                     for v in row.values()]
                )

        _emit(write, args.output)
    return EXIT_OK


def _read_records_csv(path: str) -> list[SweepRecord]:
    import csv as _csv

    fh = sys.stdin if path == "-" else open(path, "r", encoding="utf-8", newline="")
    try:
        reader = _csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ConfigError(f"input is missing columns: {sorted(missing)}")
        records = []
        for row in reader:
            tally = CoincidenceTally(
                nn=int(row["nn"]), ns=int(row["ns"]), sn=int(row["sn"]),
                ss=int(row["ss"]), null_a_only=int(row["null_a"]),
                null_b_only=int(row["null_b"]), null_both=int(row["null_both"]),
                t=int(row["t"]),
            )
            records.append(
                SweepRecord(
                    phi=float(row["phi"]), tally=tally,
                    c_hat=None, e_biased=None, singles_est=None,
                    config_hash="", seed=int(row["seed"]),
                )
            )
        return records
    finally:
        if fh is not sys.stdin:
            fh.close()


def _cmd_analyze(args: argparse.Namespace) -> int:
    records = _read_records_csv(args.input)
    try:
        report = analyze_symptoms(records, HvSpace(args.space), alpha=args.alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(lambda fh: (json.dump(report.to_dict(), fh, indent=2, sort_keys=True),
                      fh.write("\n")), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprsim",
        description="Coincidence simulation and estimator-bias analysis for "
                    "EPR-type experiments under local realistic detection models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run an angle sweep and emit the table")
    _add_common_flags(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_bell = sub.add_parser("bell", help="run a 3- or 4-run Bell test")
    _add_common_flags(p_bell, grid=False)
    p_bell.add_argument("--test", choices=[k.value for k in TestKind], default="standard")
    p_bell.add_argument("--mode", choices=[m.value for m in DenominatorMode], default="tobs")
    p_bell.add_argument("--angles", metavar="A,B,...",
                        help="comma-separated setting angles (3 for simple, 4 for standard)")
    p_bell.add_argument("--exact", action="store_true",
                        help="evaluate on oracle probabilities instead of Monte Carlo")
    p_bell.set_defaults(func=_cmd_bell, format="json")

    p_orc = sub.add_parser("oracle", help="exact category probabilities")
    _add_common_flags(p_orc)
    p_orc.add_argument("--phi", type=float, metavar="RAD",
                       help="single angle instead of the grid")
    p_orc.add_argument("--resolution", type=int, default=400)
    p_orc.set_defaults(func=_cmd_oracle)

    p_an = sub.add_parser("analyze", help="T_obs constancy / symptom report")
    p_an.add_argument("--input", default="-", metavar="FILE",
                      help="sweep CSV ('-' for stdin)")
    p_an.add_argument("--space", choices=["sphere", "circle"], default="sphere")
    p_an.add_argument("--alpha", type=float, default=0.01)
    p_an.add_argument("--output", default="-", metavar="FILE")
    p_an.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
