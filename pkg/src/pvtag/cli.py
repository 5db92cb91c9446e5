from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from typing import List, Optional, Sequence

import pandas as pd

from pvtag.apps.activity import detect_activity
from pvtag.apps.orientation import DEFAULT_AXIS_DOMINANCE, DEFAULT_G_TOLERANCE, Orientation, decode_orientation
from pvtag.apps.telemetry import simulate_telemetry
from pvtag.config import load_config
from pvtag.errors import ConfigError, DomainError
from pvtag.physics.harvester import (
    FLAT,
    EnvClass,
    IlluminationEnv,
    PvCellSpec,
    bending_factor,
    required_area,
    size_module,
    source_area_table,
)
from pvtag.physics.power_model import read_ranges
from pvtag.sim.inventory import range_sweep, run_inventory
from pvtag.sim.traces import RssiTrace, read_trace_csv, write_trace_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_DOMAIN = 4


def _finite_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def _bend(text: str):
    if text.strip().lower() == FLAT:
        return FLAT
    return _finite_float(text)


def _fmt(value: float, places: int = 4) -> str:
    if math.isnan(value):
        return "n/a"
    if math.isinf(value):
        return "inf"
    return f"{value:.{places}f}"


def cmd_range(args: argparse.Namespace) -> int:
    cfg = load_config(args.scenario)
    scenario = cfg.scenario
    tag = scenario.tag(args.tag)
    report = read_ranges(scenario.reader, tag.rf)

    print(f"tag: {tag.tag_id}")
    print(f"passive_range_m: {_fmt(report.passive_range)}")
    print(f"assisted_range_m: {_fmt(report.assisted_range)}")
    print(f"ratio: {_fmt(report.ratio)}")
    print(f"notes: {report.notes}")
    return EXIT_OK


def cmd_pv_size(args: argparse.Namespace) -> int:
    cell = PvCellSpec(efficiency=args.efficiency, vmpp=args.vmpp_v, indoor_efficiency=args.indoor_efficiency)
    irradiance = None if args.irradiance_uw_cm2 is None else args.irradiance_uw_cm2 * 1e-6
    env = IlluminationEnv.for_class(args.env, irradiance)
    load_w = args.load_uw * 1e-6
    area_cm2 = required_area(load_w, cell, env, args.bend_mm)

    print(f"load_uw: {args.load_uw:.4f}")
    print(f"environment: {env.env_class.value} ({env.irradiance * 1e6:.4f} uW/cm2)")
    print(f"bending_factor: {bending_factor(args.bend_mm):.4f}")
    print(f"required_area_cm2: {area_cm2:.6f}")
    print(f"required_area_mm2: {area_cm2 * 100:.4f}")
    if args.min_voltage_v is not None:
        module = size_module(load_w, args.min_voltage_v, cell, env, args.bend_mm)
        print(f"series_cells: {module.series_count}")
        print(f"module_vmpp_v: {module.vmpp:.4f}")
        print(f"cell_area_cm2: {module.cell.active_area:.6f}")
    return EXIT_OK


def cmd_sources(args: argparse.Namespace) -> int:
    table = source_area_table(args.load_uw * 1e-6, PvCellSpec(efficiency=args.efficiency))
    sys.stdout.write(table.to_csv(index=False, float_format="%.6g", lineterminator="\n"))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.scenario)
    if args.dump_normalized:
        sys.stdout.write(cfg.dump_normalized())
        if args.out is None:
            return EXIT_OK
    if args.out is None:
        raise ConfigError("simulate: --out is required unless --dump-normalized is given")

    result = run_inventory(cfg.scenario)
    rows = write_trace_csv(result.trace, args.out)
    print(f"Wrote: {args.out} ({rows} rows)")
    print(result.notes)
    return EXIT_OK


def _pick_tag(trace: RssiTrace, tag_id: Optional[str], role: str) -> RssiTrace:
    if tag_id is not None:
        if tag_id not in trace.tag_ids:
            raise ConfigError(f"{role} trace has no tag '{tag_id}' (tags present: {trace.tag_ids})")
        return trace.for_tag(tag_id)
    if len(trace.tag_ids) > 1:
        raise ConfigError(f"{role} trace holds tags {trace.tag_ids}; choose one with --{role}-tag")
    return trace


def cmd_detect(args: argparse.Namespace) -> int:
    params = load_config(args.scenario).detector_cfg if args.scenario else {}
    for name in ("calib_window", "k_sigma", "min_run", "sigma_floor"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value

    activity = _pick_tag(read_trace_csv(args.activity_csv), args.activity_tag, "activity")
    reference = _pick_tag(read_trace_csv(args.reference_csv), args.reference_tag, "reference")
    result = detect_activity(activity, reference, **params)

    print(f"aligned: {result.aligned_count}")
    print(f"dropped_activity: {result.dropped_activity}")
    print(f"dropped_reference: {result.dropped_reference}")
    if result.aligned_count == 0:
        print("error: traces share no time_index with a successful read on both tags", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"baseline_mean_db: {result.baseline_mean:.4f}")
    print(f"baseline_std_db: {result.baseline_std:.4f}")
    print(f"threshold_db: {result.threshold:.4f}")
    print(f"events: {len(result.events)}")
    for ev in result.events:
        print(f"event start={ev.start_index} end={ev.end_index} peak_deviation_db={ev.peak_deviation:.4f}")
    return EXIT_OK


def cmd_orient(args: argparse.Namespace) -> int:
    reading = decode_orientation((args.ax, args.ay, args.az), args.g_tolerance, args.axis_dominance)
    if reading.decoded is Orientation.INDETERMINATE:
        print(f"{reading.decoded.value}: {reading.reason}")
    else:
        print(reading.decoded.value)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = load_config(args.scenario).scenario
    if not args.step_m > 0 or args.stop_m < args.start_m:
        raise ConfigError("sweep: need step_m > 0 and stop_m >= start_m")
    count = int(math.floor((args.stop_m - args.start_m) / args.step_m + 1e-9)) + 1
    distances = [args.start_m + i * args.step_m for i in range(count)]
    points = range_sweep(scenario, args.tag, distances, trials=args.trials)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["distance_m", "mode", "read_probability"])
    for p in points:
        writer.writerow([f"{p.distance:.4f}", p.mode.label, f"{p.read_success_probability:.4f}"])
    return EXIT_OK


def _temperature_series(args: argparse.Namespace, rounds: int) -> List[float]:
    if args.temperatures_csv is not None:
        df = pd.read_csv(args.temperatures_csv)
        if "temperature_c" not in df.columns:
            raise ConfigError(f"{args.temperatures_csv}: expected a 'temperature_c' column")
        values = pd.to_numeric(df["temperature_c"], errors="coerce")
        bad = [i + 1 for i, v in enumerate(values) if not math.isfinite(v)]
        if bad:
            raise ConfigError(
                f"{args.temperatures_csv}: temperature_c must be a finite number (data rows {bad[:5]})"
            )
        return [float(v) for v in values]
    return [args.temperature_c] * rounds


def cmd_telemetry(args: argparse.Namespace) -> int:
    cfg = load_config(args.scenario)
    scenario = cfg.scenario
    series = _temperature_series(args, scenario.rounds)
    params = cfg.telemetry_cfg
    if args.quantization_c is not None:
        params["quantization"] = args.quantization_c
    readings = simulate_telemetry(scenario, args.tag, series, **params)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["time_index", "temperature_c"])
    for r in readings:
        writer.writerow([r.time_index, "" if r.temperature is None else f"{r.temperature:.4f}"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pvtag", description="PV-assisted backscatter tag simulator")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    range_p = sub.add_parser("range", help="Passive vs PV-assisted read range for a tag")
    range_p.add_argument("scenario", help="Scenario YAML file")
    range_p.add_argument("--tag", required=True, help="Tag id in the scenario")
    range_p.set_defaults(func=cmd_range)

    pv_p = sub.add_parser("pv-size", help="PV area needed for a load")
    pv_p.add_argument("--load-uw", type=_finite_float, required=True, help="Load power in uW")
    pv_p.add_argument("--efficiency", type=_finite_float, default=0.13, help="Cell efficiency (default: 0.13)")
    pv_p.add_argument("--indoor-efficiency", type=_finite_float, default=None,
                      help="Efficiency under indoor light (default: same as --efficiency)")
    pv_p.add_argument("--env", choices=[c.value for c in EnvClass], default=EnvClass.OUTDOOR_SUN.value)
    pv_p.add_argument("--irradiance-uw-cm2", type=_finite_float, default=None,
                      help="Override the environment's default irradiance")
    pv_p.add_argument("--bend-mm", type=_bend, default=FLAT, help="Bend radius in mm or 'flat'")
    pv_p.add_argument("--vmpp-v", type=_finite_float, default=0.88, help="Cell Vmpp in V (default: 0.88)")
    pv_p.add_argument("--min-voltage-v", type=_finite_float, default=None,
                      help="Also size a series string reaching this voltage")
    pv_p.set_defaults(func=cmd_pv_size)

    src_p = sub.add_parser("sources", help="Compare harvesting sources for a load")
    src_p.add_argument("--load-uw", type=_finite_float, required=True)
    src_p.add_argument("--efficiency", type=_finite_float, default=0.13)
    src_p.set_defaults(func=cmd_sources)

    sim_p = sub.add_parser("simulate", help="Run inventory rounds and write the RSSI trace CSV")
    sim_p.add_argument("scenario", help="Scenario YAML file")
    sim_p.add_argument("--out", default=None, help="Output trace CSV")
    sim_p.add_argument("--dump-normalized", action="store_true", help="Print the scenario in base units")
    sim_p.set_defaults(func=cmd_simulate)

    det_p = sub.add_parser("detect", help="Differential-RSSI activity detection")
    det_p.add_argument("activity_csv")
    det_p.add_argument("reference_csv")
    det_p.add_argument("--activity-tag", default=None)
    det_p.add_argument("--reference-tag", default=None)
    det_p.add_argument("--scenario", default=None, help="Take detector defaults from this scenario file")
    det_p.add_argument("--calib-window", dest="calib_window", type=int, default=None)
    det_p.add_argument("--k-sigma", dest="k_sigma", type=_finite_float, default=None)
    det_p.add_argument("--min-run", dest="min_run", type=int, default=None)
    det_p.add_argument("--sigma-floor-db", dest="sigma_floor", type=_finite_float, default=None)
    det_p.set_defaults(func=cmd_detect)

    or_p = sub.add_parser("orient", help="Decode orientation from an accelerometer reading")
    or_p.add_argument("ax", type=_finite_float)
    or_p.add_argument("ay", type=_finite_float)
    or_p.add_argument("az", type=_finite_float)
    or_p.add_argument("--g-tolerance", type=_finite_float, default=DEFAULT_G_TOLERANCE)
    or_p.add_argument("--axis-dominance", type=_finite_float, default=DEFAULT_AXIS_DOMINANCE)
    or_p.set_defaults(func=cmd_orient)

    sw_p = sub.add_parser("sweep", help="Read probability against distance for one tag")
    sw_p.add_argument("scenario")
    sw_p.add_argument("--tag", required=True)
    sw_p.add_argument("--start-m", type=_finite_float, default=0.1)
    sw_p.add_argument("--stop-m", type=_finite_float, default=8.0)
    sw_p.add_argument("--step-m", type=_finite_float, default=0.1)
    sw_p.add_argument("--trials", type=int, default=50)
    sw_p.set_defaults(func=cmd_sweep)

    tel_p = sub.add_parser("telemetry", help="Temperature readings a tag would report")
    tel_p.add_argument("scenario")
    tel_p.add_argument("--tag", required=True)
    series = tel_p.add_mutually_exclusive_group()
    series.add_argument("--temperature-c", type=_finite_float, default=4.0,
                        help="Constant true temperature for every round (default: 4.0)")
    series.add_argument("--temperatures-csv", default=None, help="CSV with a temperature_c column")
    tel_p.add_argument("--quantization-c", type=_finite_float, default=None)
    tel_p.set_defaults(func=cmd_telemetry)

    return p


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    logger.debug("running %s", args.command)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
