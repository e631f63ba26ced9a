"""Deterministic toolkit for simulating and evaluating website-fingerprinting defenses.

Applies the RegulaTor traffic-shaping defense and two comparison baselines
(FRONT, Tamaraw) to recorded packet traces, measures bandwidth/latency
overheads, reproduces the traffic-pattern statistics that motivate surge
shaping, scores defense efficacy with a closed-world nearest-neighbor
classifier, and searches defense parameters under a weighted loss.
"""

from .traces import (
    Dataset,
    DefendedPacket,
    DefendedTrace,
    Direction,
    Packet,
    PacketKind,
    ParseError,
    Trace,
    TraceFormat,
    attach_sources,
    load_dataset,
    parse_defended_schedule,
    parse_trace,
    write_defended_trace,
    write_trace,
)
from .regulator import (
    DownloadSchedule,
    RegulatorParams,
    ScheduleState,
    apply_regulator,
    simulate_download,
    simulate_upload,
    target_rate,
)
from .baselines import FrontParams, TamarawParams, apply_front, apply_tamaraw
from .presets import apply_defense, defense_names, get_defense
from .metrics import (
    DatasetOverhead,
    OverheadReport,
    aggregate_reports,
    bandwidth_overhead,
    dataset_overhead,
    estimated_latency_overhead,
    latency_overhead,
    trace_overhead,
)
from .stats import (
    DatasetStats,
    PostTenthProfile,
    TraceStats,
    dataset_stats,
    post_tenth_packet_profile,
    trace_stats,
    volume_adjustment,
)
from .attack import EvalResult, evaluate_closed_world, extract_features
from .synth import SynthProfile, generate, generate_classes, separable_profiles
from .tuner import LossWeights, SearchSpace, TrialRecord, loss, random_search
from .seeding import stable_seed

__version__ = "0.1.0"
