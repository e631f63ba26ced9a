"""Packet-trace data model, dataset container, and trace file I/O.

Trace files are UTF-8 text, one packet per line: `time<TAB>direction` where
the direction is a signed number (+ = upload, - = download; the magnitude,
e.g. a cell size, is ignored). Defended traces add a third column marking
each packet real or dummy: `time<TAB>±1<TAB>{R,D}`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum, IntEnum
from pathlib import Path
from typing import Optional, Sequence

logger = logging.getLogger(__name__)

# Output times are quantized to microseconds; dataset precision is coarser.
TIME_DECIMALS = 6


class Direction(IntEnum):
    """Packet direction. UPLOAD is client-to-network, written as +1."""

    UPLOAD = 1
    DOWNLOAD = -1


class PacketKind(Enum):
    REAL = "R"
    DUMMY = "D"


class TraceFormat(Enum):
    """Supported undefended trace file formats."""

    TIME_DIRECTION = "time-direction"


class ParseError(ValueError):
    """Malformed trace file; the message names the offending line."""


@dataclass(frozen=True, slots=True)
class Packet:
    time: float
    direction: Direction

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        if not self.time >= 0.0:
            raise ValueError(f"packet time must be >= 0, got {self.time}")


@dataclass(frozen=True, slots=True)
class Trace:
    """Time-ordered packets of one page load, times relative to the first packet."""

    packets: tuple[Packet, ...]
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "packets", tuple(self.packets))
        times = [p.time for p in self.packets]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("trace packets must be sorted by non-decreasing time")

    def __len__(self) -> int:
        return len(self.packets)

    def times(self, direction: Direction) -> list[float]:
        return [p.time for p in self.packets if p.direction is direction]

    def count(self, direction: Direction) -> int:
        return sum(1 for p in self.packets if p.direction is direction)

    @property
    def duration(self) -> float:
        if not self.packets:
            return 0.0
        return self.packets[-1].time - self.packets[0].time


@dataclass(frozen=True, slots=True)
class DefendedPacket:
    """One packet of a defended schedule.

    Real packets carry the availability time of the original packet they
    deliver (`source_time`); dummies carry none. A real packet can never be
    sent before it exists.
    """

    send_time: float
    direction: Direction
    kind: PacketKind
    source_time: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "send_time", float(self.send_time))
        if self.kind is PacketKind.REAL:
            if self.source_time is None:
                raise ValueError("real packet requires a source_time")
            if self.send_time < self.source_time:
                raise ValueError(
                    f"real packet sent at {self.send_time} before its source "
                    f"time {self.source_time}"
                )
        elif self.source_time is not None:
            raise ValueError("dummy packet must not carry a source_time")

    @property
    def delay(self) -> float:
        if self.source_time is None:
            return 0.0
        return self.send_time - self.source_time


@dataclass(frozen=True, slots=True)
class DefendedTrace:
    """Defended packet schedule plus the randomness bookkeeping that produced it.

    `seed` is the seed all randomness was drawn from and `drawn_budget` the
    realized download padding budget. At equal send times the download side
    is listed before the upload side, and earlier-queued packets first.
    """

    packets: tuple[DefendedPacket, ...]
    seed: int
    drawn_budget: int

    def __post_init__(self):
        object.__setattr__(self, "packets", tuple(self.packets))
        if self.drawn_budget < 0:
            raise ValueError("drawn_budget must be non-negative")
        times = [p.send_time for p in self.packets]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("defended packets must be sorted by send_time")

    def __len__(self) -> int:
        return len(self.packets)

    def real_packets(self) -> list[DefendedPacket]:
        return [p for p in self.packets if p.kind is PacketKind.REAL]

    def dummy_count(self, direction: Optional[Direction] = None) -> int:
        return sum(
            1
            for p in self.packets
            if p.kind is PacketKind.DUMMY
            and (direction is None or p.direction is direction)
        )


@dataclass(frozen=True)
class Dataset:
    """A set of labeled traces, usually one directory of trace files."""

    traces: tuple[Trace, ...]
    name: str
    filenames: Optional[tuple[str, ...]] = None
    skipped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        if self.filenames is not None:
            object.__setattr__(self, "filenames", tuple(self.filenames))
            if len(self.filenames) != len(self.traces):
                raise ValueError("filenames must align with traces")

    def __len__(self) -> int:
        return len(self.traces)

    def labels(self) -> list[Optional[str]]:
        return [t.label for t in self.traces]


def _parse_fields(line: str, lineno: int) -> tuple[float, Direction]:
    fields = line.split()
    if len(fields) < 2:
        raise ParseError(f"line {lineno}: expected `time<TAB>direction`, got {line!r}")
    try:
        time = float(fields[0])
    except ValueError:
        raise ParseError(f"line {lineno}: non-numeric time field {fields[0]!r}") from None
    try:
        value = float(fields[1])
    except ValueError:
        raise ParseError(
            f"line {lineno}: non-numeric direction field {fields[1]!r}"
        ) from None
    if value == 0:
        raise ParseError(f"line {lineno}: zero direction")
    direction = Direction.UPLOAD if value > 0 else Direction.DOWNLOAD
    return time, direction


def parse_trace(
    text: str,
    fmt: TraceFormat = TraceFormat.TIME_DIRECTION,
    label: Optional[str] = None,
) -> Trace:
    """Parse trace text into a Trace normalized to start at time 0.

    Lines are sorted if the input is unsorted (stable, so ties keep file
    order). Empty input yields an empty trace. Fields after the first two
    are ignored, so defended files with their dummy lines removed parse
    back directly.
    """
    if fmt is not TraceFormat.TIME_DIRECTION:
        raise ValueError(f"unsupported trace format {fmt!r}")
    rows: list[tuple[float, Direction]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        rows.append(_parse_fields(line, lineno))
    if not rows:
        return Trace((), label=label)
    rows.sort(key=lambda r: r[0])
    t0 = rows[0][0]
    return Trace(tuple(Packet(t - t0, d) for t, d in rows), label=label)


def write_trace(trace: Trace) -> str:
    """Serialize a trace in the time/direction file format."""
    lines = [f"{p.time:.{TIME_DECIMALS}f}\t{int(p.direction)}" for p in trace.packets]
    return "".join(line + "\n" for line in lines)


def write_defended_trace(defended: DefendedTrace) -> str:
    """Serialize a defended schedule: `time<TAB>±1<TAB>{R,D}` per packet."""
    lines = [
        f"{p.send_time:.{TIME_DECIMALS}f}\t{int(p.direction)}\t{p.kind.value}"
        for p in defended.packets
    ]
    return "".join(line + "\n" for line in lines)


def parse_defended_schedule(text: str) -> list[tuple[float, Direction, PacketKind]]:
    """Parse a defended trace file into (send_time, direction, kind) rows.

    Source times are not stored on disk; use attach_sources() with the
    original trace to recover per-packet delays.
    """
    rows: list[tuple[float, Direction, PacketKind]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError(
                f"line {lineno}: expected `time<TAB>±1<TAB>R|D`, got {line!r}"
            )
        time, direction = _parse_fields(line, lineno)
        try:
            kind = PacketKind(fields[2])
        except ValueError:
            raise ParseError(f"line {lineno}: unknown packet kind {fields[2]!r}") from None
        rows.append((time, direction, kind))
    rows.sort(key=lambda r: r[0])
    return rows


def attach_sources(
    original: Trace, rows: Sequence[tuple[float, Direction, PacketKind]]
) -> DefendedTrace:
    """Rebuild a full DefendedTrace from an original trace and a parsed schedule.

    Real packets are matched to original packets FIFO per direction, which
    the simulators guarantee. Send times quantized on disk may undershoot
    the source time by less than a microsecond; the source is clamped so
    the no-time-travel invariant still holds.
    """
    queues = {
        Direction.UPLOAD: original.times(Direction.UPLOAD),
        Direction.DOWNLOAD: original.times(Direction.DOWNLOAD),
    }
    positions = {Direction.UPLOAD: 0, Direction.DOWNLOAD: 0}
    packets: list[DefendedPacket] = []
    for send_time, direction, kind in rows:
        if kind is PacketKind.DUMMY:
            packets.append(DefendedPacket(send_time, direction, kind))
            continue
        pos = positions[direction]
        queue = queues[direction]
        if pos >= len(queue):
            raise ValueError(
                f"defended schedule has more real {direction.name.lower()} packets "
                "than the original trace"
            )
        source = queue[pos]
        if send_time < source - 10.0 ** -TIME_DECIMALS:
            raise ValueError(
                f"real packet sent at {send_time} well before source {source}; "
                "schedule does not match the original trace"
            )
        positions[direction] = pos + 1
        packets.append(
            DefendedPacket(send_time, direction, kind, min(source, send_time))
        )
    for direction, queue in queues.items():
        if positions[direction] != len(queue):
            raise ValueError(
                f"defended schedule is missing real {direction.name.lower()} packets"
            )
    dummy_downloads = sum(
        1
        for p in packets
        if p.kind is PacketKind.DUMMY and p.direction is Direction.DOWNLOAD
    )
    return DefendedTrace(tuple(packets), seed=0, drawn_budget=dummy_downloads)


def label_from_filename(name: str, separator: str = "-") -> str:
    """Label per the `<site><sep><instance>` convention; the site part."""
    if separator in name:
        return name.rsplit(separator, 1)[0]
    return name


def load_dataset(
    root: str | Path,
    fmt: TraceFormat = TraceFormat.TIME_DIRECTION,
    separator: str = "-",
) -> Dataset:
    """Load every readable trace file under `root`, lexicographic by filename.

    Unreadable or malformed files are skipped with a warning and counted in
    Dataset.skipped. A directory with zero readable trace files is an error.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"not a directory: {root}")
    traces: list[Trace] = []
    filenames: list[str] = []
    skipped = 0
    for path in sorted(p for p in root.iterdir() if p.is_file()):
        try:
            text = path.read_text(encoding="utf-8")
            trace = parse_trace(text, fmt, label=label_from_filename(path.name, separator))
        except (OSError, ParseError, UnicodeDecodeError) as exc:
            logger.warning("skipping %s: %s", path, exc)
            skipped += 1
            continue
        traces.append(trace)
        filenames.append(path.name)
    if not traces:
        raise ValueError(f"no readable trace files in {root}")
    return Dataset(tuple(traces), name=root.name, filenames=tuple(filenames), skipped=skipped)
