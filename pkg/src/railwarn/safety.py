"""Timing-budget math for a radio warning system at a railroad grade crossing.

The model tracks a handful of time components for a train approaching a
crossing and a road vehicle that must be warned in time to stop:

* time for the train to reach the crossing, from its distance and speed
* time available to act once a warning can be raised at the warning range
* driver reaction time (default 3.5 s)
* warning-system delay, propagation plus processing (default 5 ms)
* vehicle braking time, taken from the stopping-distance table below

Whatever remains of the available time after reaction, system delay and
braking is the protection margin the system grants the driver. The safeness
level normalises the train's remaining travel time against that budget:
level 0 means exactly enough time left to stop, level 1 means the full
warning-range budget is still in hand.

Vehicle stopping distances are the averages published in the Virginia
driver's manual for 25-65 mph on dry and wet pavement. The table's m/s
column keeps its original coarse rounding so that derived braking times
match the published figures; everything else in the package converts with
the exact mph factor.
"""

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

DEFAULT_REACTION_S = 3.5
DEFAULT_SYSTEM_DELAY_S = 0.005

ROADS = ("dry", "wet")


@dataclass(frozen=True)
class BrakingRow:
    speed_mph: float
    speed_mps: float
    dry_m: float
    wet_m: float


@dataclass(frozen=True)
class VehicleBrakingTable:
    """Piecewise-linear stopping-distance table indexed by vehicle speed."""

    rows: tuple[BrakingRow, ...]

    def __post_init__(self) -> None:
        if len(self.rows) < 2:
            raise ValueError("braking table needs at least two rows")
        for row in self.rows:
            if min(row.speed_mph, row.speed_mps, row.dry_m, row.wet_m) <= 0:
                raise ValueError(f"braking table row has non-positive entries: {row}")
            if row.wet_m < row.dry_m:
                raise ValueError(
                    f"wet stopping distance below dry at {row.speed_mph} mph"
                )
        speeds = [row.speed_mph for row in self.rows]
        if any(b <= a for a, b in zip(speeds, speeds[1:])):
            raise ValueError("braking table speeds must be strictly increasing")

    @property
    def min_speed_mph(self) -> float:
        return self.rows[0].speed_mph

    @property
    def max_speed_mph(self) -> float:
        return self.rows[-1].speed_mph

    def _interpolate(self, speed_mph: float, attr: str) -> float:
        if not self.min_speed_mph <= speed_mph <= self.max_speed_mph:
            raise ValueError(
                f"vehicle speed {speed_mph:g} mph outside tabulated range "
                f"{self.min_speed_mph:g}-{self.max_speed_mph:g} mph; "
                "extrapolation is not supported"
            )
        rows = self.rows
        for low, high in zip(rows, rows[1:]):
            if speed_mph <= high.speed_mph:
                if speed_mph == low.speed_mph:
                    return getattr(low, attr)
                frac = (speed_mph - low.speed_mph) / (high.speed_mph - low.speed_mph)
                lo, hi = getattr(low, attr), getattr(high, attr)
                return lo + frac * (hi - lo)
        return getattr(rows[-1], attr)

    def braking_distance_m(self, speed_mph: float, road: str = "dry") -> float:
        _check_road(road)
        return self._interpolate(speed_mph, "dry_m" if road == "dry" else "wet_m")

    def reference_speed_mps(self, speed_mph: float) -> float:
        """Tabulated m/s value (coarse rounding preserved), interpolated."""
        return self._interpolate(speed_mph, "speed_mps")

    @classmethod
    def from_csv(cls, path: str | Path) -> "VehicleBrakingTable":
        """Load a table from CSV with header speed_mph,speed_mps,db_dry_m,db_wet_m."""
        rows = []
        with open(path, newline="") as handle:
            reader = csv.DictReader(handle)
            required = {"speed_mph", "speed_mps", "db_dry_m", "db_wet_m"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(
                    f"braking table CSV must have columns {sorted(required)}"
                )
            for record in reader:
                rows.append(
                    BrakingRow(
                        speed_mph=float(record["speed_mph"]),
                        speed_mps=float(record["speed_mps"]),
                        dry_m=float(record["db_dry_m"]),
                        wet_m=float(record["db_wet_m"]),
                    )
                )
        return cls(rows=tuple(rows))


DEFAULT_BRAKING_TABLE = VehicleBrakingTable(
    rows=(
        BrakingRow(25.0, 11.11, 25.5, 51.3),
        BrakingRow(35.0, 15.55, 41.4, 82.8),
        BrakingRow(45.0, 20.00, 59.1, 118.2),
        BrakingRow(55.0, 24.44, 79.8, 159.3),
        BrakingRow(65.0, 28.89, 103.2, 206.7),
    )
)


@dataclass(frozen=True)
class TrainKinematics:
    """Instantaneous train position and speed on the track axis.

    Distance is signed: negative while approaching, 0 at the crossing.
    Warning analysis only uses the approach side; positions past the
    crossing map to an approach distance of 0.
    """

    distance_to_crossing_m: float
    speed_mps: float

    def __post_init__(self) -> None:
        if self.speed_mps <= 0:
            raise ValueError("train speed must be positive")

    @property
    def approach_distance_m(self) -> float:
        return max(0.0, -self.distance_to_crossing_m)

    def time_to_crossing_s(self) -> float:
        return time_to_crossing(self.approach_distance_m, self.speed_mps)


@dataclass(frozen=True)
class TimingBudget:
    """The additive decomposition of the time available to avoid a collision.

    reaction_s + system_delay_s + braking_s + protection_s equals
    time_to_avoid_collision_s exactly; constructors derive the dependent
    field so the identity holds by construction.
    """

    reaction_s: float
    system_delay_s: float
    braking_s: float
    time_to_avoid_collision_s: float
    protection_s: float

    def __post_init__(self) -> None:
        if min(self.reaction_s, self.system_delay_s, self.braking_s) < 0:
            raise ValueError("reaction, system delay and braking times must be >= 0")
        total = self.reaction_s + self.system_delay_s + self.braking_s + self.protection_s
        if total != self.time_to_avoid_collision_s:
            raise ValueError("budget components do not sum to the total")

    @property
    def stop_budget_s(self) -> float:
        """Minimum time needed to react and stop (excludes protection)."""
        return self.reaction_s + self.system_delay_s + self.braking_s

    @property
    def system_failed(self) -> bool:
        return self.protection_s <= 0

    @classmethod
    def from_components(
        cls,
        reaction_s: float,
        system_delay_s: float,
        braking_s: float,
        protection_s: float,
    ) -> "TimingBudget":
        total = reaction_s + system_delay_s + braking_s + protection_s
        return cls(reaction_s, system_delay_s, braking_s, total, protection_s)

    @classmethod
    def from_time_to_avoid(
        cls,
        time_to_avoid_collision_s: float,
        reaction_s: float,
        system_delay_s: float,
        braking_s: float,
    ) -> "TimingBudget":
        protection = protection_time(
            time_to_avoid_collision_s, reaction_s, system_delay_s, braking_s
        )
        # Re-derive the total from the parts; may differ from the argument by
        # one rounding step but keeps the sum identity exact.
        return cls.from_components(reaction_s, system_delay_s, braking_s, protection)


class SafenessCategory(str, Enum):
    NOT_SAFE = "not_safe"
    SAFE_BUT_CLOSE = "safe_but_close"
    NO_RISK = "no_risk"


@dataclass(frozen=True)
class SafenessResult:
    """Normalised safety margin and its classification.

    level is NaN when the margin denominator degenerates to zero. When the
    system has failed (no positive protection margin) the category is forced
    to NOT_SAFE even if the raw level came out positive, which happens when
    numerator and denominator are both negative.
    """

    level: float
    category: SafenessCategory
    system_failed: bool


def _check_road(road: str) -> None:
    if road not in ROADS:
        raise ValueError(f"road must be one of {ROADS}, got {road!r}")


def time_to_crossing(train_distance_m: float, train_speed_mps: float) -> float:
    """Seconds until a train train_distance_m away reaches the crossing."""
    if train_speed_mps <= 0:
        raise ValueError("train speed must be positive")
    if train_distance_m < 0:
        raise ValueError("approach distance must be >= 0 (use the unsigned distance)")
    return train_distance_m / train_speed_mps


def braking_time(
    vehicle_speed_mph: float,
    road: str = "dry",
    table: VehicleBrakingTable | None = None,
) -> float:
    """Vehicle braking time in seconds: stopping distance over speed.

    Tabulated speeds reproduce the published times; intermediate speeds
    interpolate the stopping distance and the tabulated m/s value linearly
    before dividing. Speeds outside the table raise.
    """
    table = DEFAULT_BRAKING_TABLE if table is None else table
    distance = table.braking_distance_m(vehicle_speed_mph, road)
    return distance / table.reference_speed_mps(vehicle_speed_mph)


def time_to_avoid_collision(warning_range_m: float, train_speed_mps: float) -> float:
    """Seconds of total budget when the warning is raised at warning_range_m."""
    if train_speed_mps <= 0:
        raise ValueError("train speed must be positive")
    if warning_range_m < 0:
        raise ValueError("warning range must be >= 0")
    return warning_range_m / train_speed_mps


def protection_time(
    time_to_avoid_collision_s: float,
    reaction_s: float,
    system_delay_s: float,
    braking_s: float,
) -> float:
    """Margin left after reaction, system delay and braking. Negative means
    the warning system cannot provide safety for these parameters."""
    if min(reaction_s, system_delay_s, braking_s) < 0:
        raise ValueError("reaction, system delay and braking times must be >= 0")
    return time_to_avoid_collision_s - (reaction_s + system_delay_s + braking_s)


def safeness_level(
    time_to_crossing_s: float,
    time_to_avoid_collision_s: float,
    reaction_s: float,
    system_delay_s: float,
    braking_s: float,
) -> SafenessResult:
    """Classify the current instant of an approach.

    level = (t_train - stop_budget) / (t_available - stop_budget) where
    stop_budget = reaction + system delay + braking. Categories: level < 0
    not safe, 0 <= level < 1 safe but close, level >= 1 no risk. A
    non-positive denominator means the system failed: the category is
    NOT_SAFE regardless of the raw level, and the level is NaN when the
    denominator is exactly zero.
    """
    if time_to_crossing_s < 0 or time_to_avoid_collision_s < 0:
        raise ValueError("times must be >= 0")
    if min(reaction_s, system_delay_s, braking_s) < 0:
        raise ValueError("reaction, system delay and braking times must be >= 0")
    stop_budget = reaction_s + system_delay_s + braking_s
    margin = time_to_avoid_collision_s - stop_budget
    if margin <= 0:
        if margin == 0:
            level = math.nan
        else:
            level = (time_to_crossing_s - stop_budget) / margin
        return SafenessResult(level, SafenessCategory.NOT_SAFE, True)
    level = (time_to_crossing_s - stop_budget) / margin
    if level >= 1.0:
        category = SafenessCategory.NO_RISK
    elif level >= 0.0:
        category = SafenessCategory.SAFE_BUT_CLOSE
    else:
        category = SafenessCategory.NOT_SAFE
    return SafenessResult(level, category, False)


def minimum_required_range(
    train_speed_mps: float,
    reaction_s: float,
    braking_s: float,
    system_delay_s: float = 0.0,
) -> float:
    """Minimum radio range a warning system must cover: train speed times the
    time to react and brake. System delay is excluded by default; pass it
    explicitly to fold it in."""
    if train_speed_mps <= 0:
        raise ValueError("train speed must be positive")
    if min(reaction_s, braking_s, system_delay_s) < 0:
        raise ValueError("times must be >= 0")
    return train_speed_mps * (reaction_s + braking_s + system_delay_s)


@dataclass(frozen=True)
class SafenessCurve:
    """Safeness level swept over train distance for one vehicle case.

    The level is linear in distance, so the 0- and 1-crossings are computed
    analytically: level 0 at train_speed * stop_budget, level 1 at the
    warning range. Their time separation equals the protection margin.
    """

    train_speed_mps: float
    vehicle_speed_mph: float
    road: str
    warning_range_m: float
    reaction_s: float
    system_delay_s: float
    braking_s: float
    distances_m: tuple[float, ...]
    levels: tuple[float, ...]
    zero_cross_distance_m: float
    one_cross_distance_m: float
    protection_s: float
    system_failed: bool


def safeness_curve(
    train_speed_mps: float,
    warning_range_m: float,
    vehicle_speed_mph: float,
    road: str = "dry",
    reaction_s: float = DEFAULT_REACTION_S,
    system_delay_s: float = DEFAULT_SYSTEM_DELAY_S,
    distances_m: "tuple[float, ...] | list[float] | None" = None,
    table: VehicleBrakingTable | None = None,
) -> SafenessCurve:
    """Evaluate the safeness level over a sweep of train distances.

    The time budget is fixed by the warning range; only the train's
    remaining travel time varies along the sweep. The sweep must reach at
    least the warning range so the level-1 crossing is inside it.
    """
    if train_speed_mps <= 0:
        raise ValueError("train speed must be positive")
    if warning_range_m < 0:
        raise ValueError("warning range must be >= 0")
    braking_s = braking_time(vehicle_speed_mph, road, table)
    if distances_m is None:
        top = warning_range_m * 1.25 if warning_range_m > 0 else 1.0
        count = 251
        distances = tuple(top * i / (count - 1) for i in range(count))
    else:
        distances = tuple(float(d) for d in distances_m)
        if not distances:
            raise ValueError("distance sweep must be non-empty")
        if any(d < 0 for d in distances):
            raise ValueError("distance sweep must be non-negative")
        if max(distances) < warning_range_m:
            raise ValueError("distance sweep must extend to the warning range")
    total_budget = time_to_avoid_collision(warning_range_m, train_speed_mps)
    levels = []
    failed = False
    for distance in distances:
        result = safeness_level(
            time_to_crossing(distance, train_speed_mps),
            total_budget,
            reaction_s,
            system_delay_s,
            braking_s,
        )
        levels.append(result.level)
        failed = result.system_failed
    stop_budget = reaction_s + system_delay_s + braking_s
    return SafenessCurve(
        train_speed_mps=train_speed_mps,
        vehicle_speed_mph=vehicle_speed_mph,
        road=road,
        warning_range_m=warning_range_m,
        reaction_s=reaction_s,
        system_delay_s=system_delay_s,
        braking_s=braking_s,
        distances_m=distances,
        levels=tuple(levels),
        zero_cross_distance_m=train_speed_mps * stop_budget,
        one_cross_distance_m=warning_range_m,
        protection_s=total_budget - stop_budget,
        system_failed=failed,
    )
