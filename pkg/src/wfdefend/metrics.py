"""Bandwidth and latency overhead metrics, per trace and per dataset.

Bandwidth overhead divides the dummy packets sent in the defended trace by
the packet count of the undefended trace. Latency overhead compares the
sending time of the last real packet in the defended trace with the last
packet of the undefended trace, clamped at zero. A second latency figure
estimates user-visible delay as the delay of the last real download packet
plus the worst delay of any upload packet, over the original duration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .traces import DefendedTrace, Direction, PacketKind, Trace


@dataclass(frozen=True, slots=True)
class OverheadReport:
    bandwidth_overhead: float
    latency_overhead: float
    estimated_latency_overhead: float
    dummy_count: int
    real_count: int
    max_upload_delay: float
    last_real_download_delay: float


@dataclass(frozen=True)
class DatasetOverhead:
    mean_bandwidth: float
    aggregate_bandwidth: float
    mean_latency: float
    mean_estimated_latency: float
    per_trace: tuple[OverheadReport, ...]


def _last_original_time(original: Trace) -> float:
    if not original.packets:
        raise ValueError("overhead is undefined for an empty original trace")
    return original.packets[-1].time


def bandwidth_overhead(original: Trace, defended: DefendedTrace) -> float:
    """Dummy packets sent divided by the original packet count."""
    if not original.packets:
        raise ValueError("bandwidth overhead is undefined for an empty original trace")
    return defended.dummy_count() / len(original)


def latency_overhead(original: Trace, defended: DefendedTrace) -> float:
    """Extra delay of the last real packet relative to the original duration."""
    t_last = _last_original_time(original)
    if t_last <= 0:
        raise ValueError("latency overhead is undefined for a zero-duration trace")
    last_real = max(
        (p.send_time for p in defended.packets if p.kind is PacketKind.REAL),
        default=None,
    )
    if last_real is None:
        raise ValueError("defended trace carries no real packets")
    return max(0.0, last_real - t_last) / t_last


def estimated_latency_overhead(original: Trace, defended: DefendedTrace) -> float:
    """Delay of the last real download packet plus the worst upload delay,
    over the original duration. Directions with no packets contribute 0."""
    t_last = _last_original_time(original)
    if t_last <= 0:
        raise ValueError("latency overhead is undefined for a zero-duration trace")
    last_download_delay = 0.0
    max_upload_delay = 0.0
    for p in defended.packets:
        if p.kind is not PacketKind.REAL:
            continue
        if p.direction is Direction.DOWNLOAD:
            last_download_delay = p.delay
        elif p.delay > max_upload_delay:
            max_upload_delay = p.delay
    return (last_download_delay + max_upload_delay) / t_last


def trace_overhead(original: Trace, defended: DefendedTrace) -> OverheadReport:
    t_last = _last_original_time(original)
    if t_last <= 0:
        raise ValueError("latency overhead is undefined for a zero-duration trace")
    last_download_delay = 0.0
    max_upload_delay = 0.0
    for p in defended.packets:
        if p.kind is not PacketKind.REAL:
            continue
        if p.direction is Direction.DOWNLOAD:
            last_download_delay = p.delay
        elif p.delay > max_upload_delay:
            max_upload_delay = p.delay
    return OverheadReport(
        bandwidth_overhead=bandwidth_overhead(original, defended),
        latency_overhead=latency_overhead(original, defended),
        estimated_latency_overhead=(last_download_delay + max_upload_delay) / t_last,
        dummy_count=defended.dummy_count(),
        real_count=len(original),
        max_upload_delay=max_upload_delay,
        last_real_download_delay=last_download_delay,
    )


def aggregate_reports(reports: Sequence[OverheadReport]) -> DatasetOverhead:
    if not reports:
        raise ValueError("no overhead reports to aggregate")
    n = len(reports)
    total_real = sum(r.real_count for r in reports)
    total_dummy = sum(r.dummy_count for r in reports)
    return DatasetOverhead(
        mean_bandwidth=sum(r.bandwidth_overhead for r in reports) / n,
        aggregate_bandwidth=total_dummy / total_real,
        mean_latency=sum(r.latency_overhead for r in reports) / n,
        mean_estimated_latency=sum(r.estimated_latency_overhead for r in reports) / n,
        per_trace=tuple(reports),
    )


def dataset_overhead(
    originals: Sequence[Trace], defendeds: Sequence[DefendedTrace]
) -> DatasetOverhead:
    """Per-trace reports plus mean and aggregate (sum dummy / sum real)
    bandwidth and mean latency over pairwise-aligned trace sets."""
    if len(originals) != len(defendeds):
        raise ValueError(
            f"mismatched lengths: {len(originals)} originals, {len(defendeds)} defended"
        )
    reports = [trace_overhead(o, d) for o, d in zip(originals, defendeds)]
    return aggregate_reports(reports)


def kv_lines(overhead: DatasetOverhead) -> list[str]:
    """Line-oriented key=value rendering of a dataset overhead summary."""
    return [
        f"traces={len(overhead.per_trace)}",
        f"mean_bandwidth_overhead={overhead.mean_bandwidth:.6f}",
        f"aggregate_bandwidth_overhead={overhead.aggregate_bandwidth:.6f}",
        f"mean_latency_overhead={overhead.mean_latency:.6f}",
        f"mean_estimated_latency_overhead={overhead.mean_estimated_latency:.6f}",
    ]


CSV_HEADER = (
    "name,real_count,dummy_count,bandwidth_overhead,latency_overhead,"
    "estimated_latency_overhead,max_upload_delay,last_real_download_delay"
)


def csv_table(overhead: DatasetOverhead, names: Optional[Sequence[str]] = None) -> str:
    """Comma-separated per-trace table for downstream plotting."""
    if names is not None and len(names) != len(overhead.per_trace):
        raise ValueError("names must align with per-trace reports")
    lines = [CSV_HEADER]
    for i, r in enumerate(overhead.per_trace):
        name = names[i] if names is not None else str(i)
        lines.append(
            f"{name},{r.real_count},{r.dummy_count},{r.bandwidth_overhead:.6f},"
            f"{r.latency_overhead:.6f},{r.estimated_latency_overhead:.6f},"
            f"{r.max_upload_delay:.6f},{r.last_real_download_delay:.6f}"
        )
    return "".join(line + "\n" for line in lines)
