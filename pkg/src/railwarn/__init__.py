"""Deterministic radio warning simulator for railroad grade crossings.

Simulates a train broadcasting periodic safety messages while approaching a
crossing, models per-packet radio success (empirical error-rate tables or a
synthetic path-loss channel), drives the receiver warning logic, and
reproduces the downstream analysis: windowed packet error rate, received
counts, coverage range, latency statistics, protection time and safeness
curves.
"""

from .analysis import (
    CoverageReport,
    LatencyStats,
    PerBin,
    PerSeries,
    SafenessReport,
    SafenessRow,
    bin_per,
    coverage_report,
    extract_dwarn,
    latency_stats,
    received_counts,
    safeness_report,
)
from .antenna import (
    AntennaPattern,
    bidirectional_pattern,
    builtin_pattern,
    effective_gain_profile,
    omni_pattern,
    pattern_from_csv,
    pattern_gain,
)
from .config import (
    AnalysisDefaults,
    ConfigError,
    LoadedConfig,
    load_config,
    load_scenario,
    write_scenario,
)
from .engine import (
    PacketRecord,
    Scenario,
    SimLog,
    SweepPoint,
    SweepResult,
    TrainRun,
    receiver_stream,
    run_pass,
    run_sweep,
    scenario_digest,
)
from .geometry import (
    CrossingScene,
    DegenerateGeometryError,
    LinkGeometry,
    Placement,
    link_geometry,
)
from .link import (
    LatencyModel,
    ObstructionSegment,
    PerProfile,
    RadioConfig,
    SyntheticChannel,
    friis_reference_loss_db,
    latency_sample,
    packet_success_probability,
    path_loss_db,
)
from .logio import read_field_log, read_log, write_log
from .protocol import (
    BsmMessage,
    ReceiverState,
    TrainState,
    TriggerPolicy,
    WarningEvent,
    generate_bsm,
    receiver_ingest,
    rsu_relay,
)
from .safety import (
    DEFAULT_BRAKING_TABLE,
    SafenessCategory,
    SafenessCurve,
    SafenessResult,
    TimingBudget,
    TrainKinematics,
    VehicleBrakingTable,
    braking_time,
    minimum_required_range,
    protection_time,
    safeness_curve,
    safeness_level,
    time_to_avoid_collision,
    time_to_crossing,
)
from .units import mph_to_mps, mps_to_mph, parse_speed

__version__ = "0.1.0"
