"""Measurement-analysis pipeline over packet logs.

Works identically on simulated logs and ingested field captures: bin packet
outcomes into distance windows anchored at the crossing, extract the
reliable coverage range, summarise latency, and convert coverage into
protection-time and safeness-curve reports.

Distance bins are half-open [i*w, (i+1)*w) so one bin edge always sits at
the crossing; approach-side bins have negative centers.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import SimLog
from .safety import (
    DEFAULT_REACTION_S,
    DEFAULT_SYSTEM_DELAY_S,
    VehicleBrakingTable,
    safeness_curve,
    time_to_avoid_collision,
)


@dataclass(frozen=True)
class PerBin:
    d_center_m: float
    transmitted: int
    received: int
    per: float


@dataclass(frozen=True)
class PerSeries:
    receiver_id: str
    window_width_m: float
    bins: tuple[PerBin, ...]


def _single_receiver_id(log: SimLog, receiver_id: str | None) -> str:
    if receiver_id is not None:
        if receiver_id not in log.records:
            raise KeyError(f"receiver {receiver_id!r} not in log")
        return receiver_id
    ids = list(log.records)
    if len(ids) != 1:
        raise ValueError(f"log has receivers {ids}; pass receiver_id explicitly")
    return ids[0]


def bin_per(
    log: SimLog, window_width_m: float = 50.0, receiver_id: str | None = None
) -> PerSeries:
    """Packet error rate per distance window for one receiver."""
    if window_width_m <= 0:
        raise ValueError("window width must be positive")
    rid = _single_receiver_id(log, receiver_id)
    records = log.records[rid]
    if not records:
        raise ValueError("empty log")
    counts: dict = {}
    for record in records:
        index = math.floor(record.train_d_t_m / window_width_m)
        tx, rx = counts.get(index, (0, 0))
        counts[index] = (tx + 1, rx + (1 if record.decoded else 0))
    bins = []
    for index in sorted(counts):
        tx, rx = counts[index]
        bins.append(
            PerBin(
                d_center_m=(index + 0.5) * window_width_m,
                transmitted=tx,
                received=rx,
                per=(tx - rx) / tx,
            )
        )
    return PerSeries(receiver_id=rid, window_width_m=window_width_m, bins=tuple(bins))


def received_counts(
    log: SimLog, window_width_m: float = 50.0, receiver_id: str | None = None
) -> list:
    """Absolute decoded counts per window, the reliability view of a pass."""
    series = bin_per(log, window_width_m, receiver_id)
    return [(b.d_center_m, b.received) for b in series.bins]


@dataclass(frozen=True)
class CoverageReport:
    """Reliable warning coverage extracted from binned counts.

    warning_range_m uses the contiguity rule: every approach bin inside the
    range meets the threshold. farthest_qualifying_m is the outer edge of
    the farthest approach bin that meets the threshold anywhere, which can
    exceed the contiguous range when coverage has holes.
    """

    warning_range_m: float
    threshold_used: int
    contiguous: bool
    farthest_qualifying_m: float
    warning_failure: bool
    per_receiver: "dict | None" = None


def _series_to_indexed(series: PerSeries) -> tuple[dict, float]:
    width = series.window_width_m
    indexed = {}
    for b in series.bins:
        indexed[round(b.d_center_m / width - 0.5)] = b.received
    return indexed, width


def extract_dwarn(
    series,
    threshold: int,
    window_width_m: float | None = None,
) -> CoverageReport:
    """Coverage range from a PerSeries or a list of (d_center, received).

    Walks approach-side bins outward from the crossing; the contiguous
    range ends at the first bin that misses the threshold (or has no data).
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if isinstance(series, PerSeries):
        indexed, width = _series_to_indexed(series)
    else:
        if window_width_m is None or window_width_m <= 0:
            raise ValueError("window_width_m is required for a bare counts list")
        width = window_width_m
        indexed = {
            round(center / width - 0.5): received for center, received in series
        }
    approach = {i: r for i, r in indexed.items() if i < 0}
    if not approach:
        raise ValueError("series has no approach-side bins")
    qualifying = [i for i, r in approach.items() if r >= threshold]
    farthest = -min(qualifying) * width if qualifying else 0.0
    index = -1
    while index in approach and approach[index] >= threshold:
        index -= 1
    contiguous_range = -(index + 1) * width
    return CoverageReport(
        warning_range_m=contiguous_range,
        threshold_used=threshold,
        contiguous=bool(qualifying) and farthest == contiguous_range,
        farthest_qualifying_m=farthest,
        warning_failure=not qualifying,
    )


def coverage_report(
    log: SimLog, window_width_m: float = 50.0, threshold: int = 5
) -> CoverageReport:
    """Per-receiver coverage plus a conservative aggregate (worst receiver)."""
    per_receiver = {
        rid: extract_dwarn(bin_per(log, window_width_m, rid), threshold)
        for rid in log.records
    }
    worst = min(per_receiver.values(), key=lambda r: r.warning_range_m)
    return CoverageReport(
        warning_range_m=worst.warning_range_m,
        threshold_used=threshold,
        contiguous=worst.contiguous,
        farthest_qualifying_m=worst.farthest_qualifying_m,
        warning_failure=worst.warning_failure,
        per_receiver=per_receiver,
    )


@dataclass(frozen=True)
class LatencyStats:
    count: int
    mean_s: float
    p50_s: float
    p95_s: float
    max_s: float
    fraction_below_5ms: float
    fraction_below_period: float


def latency_stats(
    log: SimLog, receiver_id: str | None = None, period_s: float | None = None
) -> LatencyStats:
    """Latency summary over decoded packets only."""
    if receiver_id is None:
        latencies = [
            r.latency_s for recs in log.records.values() for r in recs if r.decoded
        ]
    else:
        latencies = [r.latency_s for r in log.records[receiver_id] if r.decoded]
    if not latencies:
        raise ValueError("no decoded packets in log")
    period = log.tx_period_s if period_s is None else period_s
    values = np.array(latencies)
    return LatencyStats(
        count=len(latencies),
        mean_s=float(values.mean()),
        p50_s=float(np.percentile(values, 50)),
        p95_s=float(np.percentile(values, 95)),
        max_s=float(values.max()),
        fraction_below_5ms=float((values < 5e-3).mean()),
        fraction_below_period=float((values < period).mean()),
    )


@dataclass(frozen=True)
class SafenessRow:
    vehicle_speed_mph: float
    road: str
    braking_s: float
    time_to_avoid_collision_s: float
    protection_s: float
    zero_cross_distance_m: float
    one_cross_distance_m: float
    system_failed: bool


@dataclass
class SafenessReport:
    warning_range_m: float
    train_speed_mps: float
    reaction_s: float
    system_delay_s: float
    rows: list
    curves: list

    def protection_band_s(self) -> "tuple[float, float] | None":
        values = [row.protection_s for row in self.rows if not row.system_failed]
        if not values:
            return None
        return min(values), max(values)


def safeness_report(
    coverage,
    train_speed_mps: float,
    vehicle_speeds_mph=(25.0, 35.0, 45.0, 55.0, 65.0),
    roads=("dry", "wet"),
    reaction_s: float = DEFAULT_REACTION_S,
    system_delay_s: float = DEFAULT_SYSTEM_DELAY_S,
    table: VehicleBrakingTable | None = None,
    distances_m=None,
) -> SafenessReport:
    """Protection time and safeness curves over a vehicle grid.

    coverage may be a CoverageReport or a bare warning range in meters.
    A zero range marks every grid point as failed rather than raising.
    """
    if isinstance(coverage, CoverageReport):
        warning_range = coverage.warning_range_m
    else:
        warning_range = float(coverage)
    if warning_range < 0:
        raise ValueError("warning range must be >= 0")
    rows = []
    curves = []
    for speed in vehicle_speeds_mph:
        for road in roads:
            curve = safeness_curve(
                train_speed_mps,
                warning_range,
                speed,
                road,
                reaction_s,
                system_delay_s,
                distances_m,
                table,
            )
            rows.append(
                SafenessRow(
                    vehicle_speed_mph=speed,
                    road=road,
                    braking_s=curve.braking_s,
                    time_to_avoid_collision_s=time_to_avoid_collision(
                        warning_range, train_speed_mps
                    ),
                    protection_s=curve.protection_s,
                    zero_cross_distance_m=curve.zero_cross_distance_m,
                    one_cross_distance_m=curve.one_cross_distance_m,
                    system_failed=curve.system_failed,
                )
            )
            curves.append(curve)
    return SafenessReport(
        warning_range_m=warning_range,
        train_speed_mps=train_speed_mps,
        reaction_s=reaction_s,
        system_delay_s=system_delay_s,
        rows=rows,
        curves=curves,
    )


def _write_csv(path: str | Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def write_per_csv(series_list, path: str | Path) -> None:
    rows = [
        [s.receiver_id, b.d_center_m, b.transmitted, b.received, b.per]
        for s in series_list
        for b in s.bins
    ]
    _write_csv(path, ["receiver_id", "d_center_m", "transmitted", "received", "per"], rows)


def write_counts_csv(series_list, path: str | Path) -> None:
    rows = [
        [s.receiver_id, b.d_center_m, b.received] for s in series_list for b in s.bins
    ]
    _write_csv(path, ["receiver_id", "d_center_m", "received"], rows)


def write_latency_csv(stats_by_receiver: dict, path: str | Path) -> None:
    rows = [
        [
            rid,
            s.count,
            s.mean_s,
            s.p50_s,
            s.p95_s,
            s.max_s,
            s.fraction_below_5ms,
            s.fraction_below_period,
        ]
        for rid, s in stats_by_receiver.items()
    ]
    _write_csv(
        path,
        [
            "receiver_id",
            "count",
            "mean_s",
            "p50_s",
            "p95_s",
            "max_s",
            "fraction_below_5ms",
            "fraction_below_period",
        ],
        rows,
    )


def write_coverage_csv(report: CoverageReport, path: str | Path) -> None:
    header = [
        "receiver_id",
        "warning_range_m",
        "farthest_qualifying_m",
        "contiguous",
        "threshold",
        "warning_failure",
    ]
    rows = []
    if report.per_receiver:
        for rid, sub in sorted(report.per_receiver.items()):
            rows.append(
                [
                    rid,
                    sub.warning_range_m,
                    sub.farthest_qualifying_m,
                    sub.contiguous,
                    sub.threshold_used,
                    sub.warning_failure,
                ]
            )
    rows.append(
        [
            "aggregate",
            report.warning_range_m,
            report.farthest_qualifying_m,
            report.contiguous,
            report.threshold_used,
            report.warning_failure,
        ]
    )
    _write_csv(path, header, rows)


def write_safeness_csv(report: SafenessReport, path: str | Path) -> None:
    rows = [
        [
            row.vehicle_speed_mph,
            row.road,
            row.braking_s,
            row.time_to_avoid_collision_s,
            row.protection_s,
            row.zero_cross_distance_m,
            row.one_cross_distance_m,
            row.system_failed,
        ]
        for row in report.rows
    ]
    _write_csv(
        path,
        [
            "vehicle_speed_mph",
            "road",
            "braking_s",
            "time_to_avoid_collision_s",
            "protection_s",
            "zero_cross_distance_m",
            "one_cross_distance_m",
            "system_failed",
        ],
        rows,
    )


def write_curves_csv(report: SafenessReport, path: str | Path) -> None:
    rows = [
        [curve.vehicle_speed_mph, curve.road, d, level]
        for curve in report.curves
        for d, level in zip(curve.distances_m, curve.levels)
    ]
    _write_csv(path, ["vehicle_speed_mph", "road", "d_t_m", "safeness_level"], rows)
