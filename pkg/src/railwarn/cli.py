"""Command-line surface tying simulation to analysis.

Subcommands: simulate, analyze, coverage, safeness, sweep. Exit codes:
0 success, 1 usage, 2 config/schema problem, 3 runtime failure. Errors
print a single machine-parsable line to stderr:  error: <category>: <msg>
"""

import argparse
import csv
import sys
from pathlib import Path

from . import analysis as an
from . import logio
from .config import ConfigError, load_config
from .engine import run_pass, run_sweep
from .units import parse_speed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="railwarn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one pass from a scenario config")
    p_sim.add_argument("config")
    p_sim.add_argument("-o", "--output", help="log path (default: <config stem>.log.jsonl)")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_an = sub.add_parser("analyze", help="PER, counts and latency tables from a log")
    p_an.add_argument("log")
    p_an.add_argument("--window", type=float, default=None, help="bin width in meters")
    p_an.add_argument("--out-dir", default=".", help="directory for the CSV outputs")
    p_an.add_argument("--field-csv", action="store_true", help="log is a field-capture CSV")

    p_cov = sub.add_parser("coverage", help="warning coverage range from a log")
    p_cov.add_argument("log")
    p_cov.add_argument("--window", type=float, default=None)
    p_cov.add_argument("--threshold", type=int, default=None, help="required packets per bin")
    p_cov.add_argument("--out", help="optional CSV output path")
    p_cov.add_argument("--field-csv", action="store_true")

    p_safe = sub.add_parser("safeness", help="protection time and safeness curves")
    group = p_safe.add_mutually_exclusive_group(required=True)
    group.add_argument("--dwarn", type=float, help="warning range in meters")
    group.add_argument("--coverage-from", help="log file to extract the range from")
    p_safe.add_argument("--train-speed", required=True, help="e.g. 10mph or 4.47 (m/s)")
    p_safe.add_argument("--vehicle-speeds", default="25,35,45,55,65", help="mph list")
    p_safe.add_argument("--roads", default="dry,wet")
    p_safe.add_argument("--tr", type=float, default=3.5, help="driver reaction time, s")
    p_safe.add_argument("--ts", type=float, default=0.005, help="system delay, s")
    p_safe.add_argument("--window", type=float, default=None)
    p_safe.add_argument("--threshold", type=int, default=None)
    p_safe.add_argument("--out", help="protection-time table CSV")
    p_safe.add_argument("--curves-out", help="safeness curve CSV")

    p_sweep = sub.add_parser("sweep", help="grid of passes around a base config")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--speeds", help="comma list, e.g. 20mph,50mph,79mph")
    p_sweep.add_argument("--powers", help="comma list of dBm values")
    p_sweep.add_argument("--modulations", help="comma list, e.g. QPSK,16QAM")
    p_sweep.add_argument("--antennas", help="comma list of transmit antenna names")
    p_sweep.add_argument("--seeds", help="comma list of integer seeds")
    p_sweep.add_argument("--out-dir", default="sweep", help="directory for per-point logs")
    p_sweep.add_argument("--workers", type=int, default=None)
    return parser


def _split(text: str | None, conv=str) -> list | None:
    if text is None:
        return None
    return [conv(item) for item in text.split(",") if item.strip()]


def _read_any_log(path: str, field_csv: bool):
    if field_csv:
        return logio.read_field_log(path)
    return logio.read_log(path)


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    log = run_pass(cfg.scenario, seed=args.seed)
    log.analysis_window_m = cfg.analysis.window_width_m
    log.coverage_threshold = cfg.analysis.coverage_threshold
    output = args.output or (Path(args.config).stem + ".log.jsonl")
    logio.write_log(log, output)
    decoded = sum(1 for recs in log.records.values() for r in recs if r.decoded)
    print(
        f"wrote {output}: {log.packet_count()} packet records, "
        f"{decoded} decoded, {len(log.events)} warning event(s), "
        f"digest {log.digest[:12]}"
    )
    return EXIT_OK


def _cmd_analyze(args) -> int:
    log = _read_any_log(args.log, args.field_csv)
    window = args.window if args.window is not None else log.analysis_window_m
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = [an.bin_per(log, window, rid) for rid in log.receiver_ids()]
    an.write_per_csv(series, out_dir / "per.csv")
    an.write_counts_csv(series, out_dir / "counts.csv")
    stats = {}
    for rid in log.receiver_ids():
        try:
            stats[rid] = an.latency_stats(log, rid)
        except ValueError:
            continue
    an.write_latency_csv(stats, out_dir / "latency.csv")
    for s in series:
        worst = max(b.per for b in s.bins)
        print(f"{s.receiver_id}: {len(s.bins)} bins of {window:g} m, worst per {worst:.3f}")
    for rid, s in stats.items():
        print(
            f"{rid}: latency mean {s.mean_s * 1e3:.3f} ms, p95 {s.p95_s * 1e3:.3f} ms, "
            f"below 5 ms {s.fraction_below_5ms:.3f}"
        )
    print(f"wrote {out_dir / 'per.csv'}, {out_dir / 'counts.csv'}, {out_dir / 'latency.csv'}")
    return EXIT_OK


def _cmd_coverage(args) -> int:
    log = _read_any_log(args.log, args.field_csv)
    window = args.window if args.window is not None else log.analysis_window_m
    threshold = args.threshold if args.threshold is not None else log.coverage_threshold
    report = an.coverage_report(log, window, threshold)
    for rid, sub in sorted((report.per_receiver or {}).items()):
        print(
            f"{rid}: warning range {sub.warning_range_m:g} m, "
            f"farthest qualifying {sub.farthest_qualifying_m:g} m, "
            f"contiguous {str(sub.contiguous).lower()}"
        )
    print(
        f"aggregate: warning range {report.warning_range_m:g} m "
        f"(threshold {threshold} per {window:g} m bin)"
    )
    if report.warning_failure:
        print("warning-failure: no bin met the threshold")
    if args.out:
        an.write_coverage_csv(report, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_safeness(args) -> int:
    if args.coverage_from:
        log = logio.read_log(args.coverage_from)
        window = args.window if args.window is not None else log.analysis_window_m
        threshold = args.threshold if args.threshold is not None else log.coverage_threshold
        warning_range = an.coverage_report(log, window, threshold).warning_range_m
    else:
        warning_range = args.dwarn
    train_speed = parse_speed(args.train_speed)
    report = an.safeness_report(
        warning_range,
        train_speed,
        vehicle_speeds_mph=_split(args.vehicle_speeds, float),
        roads=_split(args.roads),
        reaction_s=args.tr,
        system_delay_s=args.ts,
    )
    print(
        f"warning range {warning_range:g} m, train speed {train_speed:.4f} m/s, "
        f"reaction {args.tr:g} s, system delay {args.ts:g} s"
    )
    for row in report.rows:
        status = "FAILED" if row.system_failed else f"{row.protection_s:7.2f} s"
        print(
            f"  vehicle {row.vehicle_speed_mph:4.0f} mph {row.road:3s}: "
            f"braking {row.braking_s:5.2f} s, protection {status}"
        )
    band = report.protection_band_s()
    if band is not None:
        print(f"protection band: {band[0]:.2f} to {band[1]:.2f} s")
    else:
        print("system failure at every grid point")
    if args.out:
        an.write_safeness_csv(report, args.out)
        print(f"wrote {args.out}")
    if args.curves_out:
        an.write_curves_csv(report, args.curves_out)
        print(f"wrote {args.curves_out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    speeds = _split(args.speeds, parse_speed)
    powers = _split(args.powers, float)
    mods = _split(args.modulations)
    antennas = _split(args.antennas)
    seeds = _split(args.seeds, int)
    results = run_sweep(
        cfg.scenario,
        speeds_mps=speeds,
        powers_dbm=powers,
        modulations=mods,
        antennas=antennas,
        seeds=seeds,
        max_workers=args.workers,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    for index, result in enumerate(results):
        point = result.point
        log = result.log
        log.analysis_window_m = cfg.analysis.window_width_m
        log.coverage_threshold = cfg.analysis.coverage_threshold
        name = (
            f"point{index:03d}_v{point.speed_mps:g}_p{point.tx_power_dbm:g}"
            f"_{point.modulation}_{point.tx_antenna}_s{point.seed}.log.jsonl"
        )
        logio.write_log(log, out_dir / name)
        decoded = sum(1 for recs in log.records.values() for r in recs if r.decoded)
        coverage = an.coverage_report(
            log, cfg.analysis.window_width_m, cfg.analysis.coverage_threshold
        )
        summary_rows.append(
            [
                name,
                point.speed_mps,
                point.tx_power_dbm,
                point.modulation,
                point.tx_antenna,
                point.seed,
                log.packet_count(),
                decoded,
                len(log.events),
                coverage.warning_range_m,
            ]
        )
    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "log",
                "speed_mps",
                "tx_power_dbm",
                "modulation",
                "tx_antenna",
                "seed",
                "packets",
                "decoded",
                "events",
                "warning_range_m",
            ]
        )
        writer.writerows(summary_rows)
    print(f"wrote {len(results)} logs and {summary_path}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "coverage": _cmd_coverage,
    "safeness": _cmd_safeness,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
