"""Shared test fixtures: random trace/parameter generators and invariant checks."""

from __future__ import annotations

import numpy as np

from wfdefend import (
    DefendedTrace,
    Direction,
    Packet,
    PacketKind,
    RegulatorParams,
    Trace,
)


def random_trace(rng: np.random.Generator, max_packets: int = 500) -> Trace:
    """Random trace mixing uniform, bursty, and tie-heavy timing styles."""
    n = int(rng.integers(0, max_packets + 1))
    if n == 0:
        return Trace(())
    duration = float(rng.uniform(0.5, 20.0))
    style = int(rng.integers(0, 3))
    if style == 0:
        times = np.sort(rng.uniform(0.0, duration, n))
    elif style == 1:
        surges = int(rng.integers(1, 6))
        centers = np.sort(rng.uniform(0.0, duration, surges))
        counts = rng.multinomial(n, np.ones(surges) / surges)
        parts = [
            c + np.abs(rng.normal(0.0, 0.05, k)) for c, k in zip(centers, counts) if k
        ]
        times = np.sort(np.concatenate(parts))
    else:
        # Coarse rounding forces many duplicate timestamps.
        times = np.sort(np.round(rng.uniform(0.0, duration, n), 2))
    p_upload = float(rng.uniform(0.1, 0.9))
    uploads = rng.random(n) < p_upload
    times = times - times[0]
    return Trace(
        tuple(
            Packet(float(t), Direction.UPLOAD if u else Direction.DOWNLOAD)
            for t, u in zip(times, uploads)
        )
    )


def random_params(rng: np.random.Generator, max_budget: int = 400) -> RegulatorParams:
    return RegulatorParams(
        R=float(rng.uniform(2.0, 300.0)),
        D=float(rng.uniform(0.7, 0.97)),
        T=float(rng.uniform(0.5, 10.0)),
        N=int(rng.integers(0, max_budget + 1)),
        U=float(rng.uniform(1.0, 8.0)),
        C=float(rng.uniform(0.5, 5.0)),
        initial_upload_rate=float(rng.uniform(1.0, 8.0)),
        tail_grace=float(rng.choice([0.0, 0.0, 0.0, 1.0])),
    )


def seed_with_budget(n: int, want: int, limit: int = 100_000) -> int:
    """Find a seed whose budget draw from {0..n} equals `want`."""
    for seed in range(limit):
        if int(np.random.default_rng(seed).integers(0, n + 1)) == want:
            return seed
    raise AssertionError(f"no seed in range yields budget {want} of {n}")


def assert_conservation_and_fifo(original: Trace, defended: DefendedTrace) -> None:
    """Real packets of the defended schedule must be exactly the original
    packets, once each, FIFO per direction, never sent early."""
    for direction in (Direction.UPLOAD, Direction.DOWNLOAD):
        original_times = original.times(direction)
        sources = [
            p.source_time
            for p in defended.packets
            if p.kind is PacketKind.REAL and p.direction is direction
        ]
        assert sources == original_times, (
            f"{direction.name}: real packets do not match the original schedule"
        )
    for p in defended.packets:
        if p.kind is PacketKind.REAL:
            assert p.send_time >= p.source_time


def schedule_key(defended: DefendedTrace) -> list[tuple[float, int, str]]:
    return [(p.send_time, int(p.direction), p.kind.value) for p in defended.packets]


def assert_same_schedule(a: DefendedTrace, b: DefendedTrace, tol: float = 1e-9) -> None:
    assert len(a) == len(b), f"packet counts differ: {len(a)} vs {len(b)}"
    for pa, pb in zip(a.packets, b.packets):
        assert abs(pa.send_time - pb.send_time) <= tol
        assert pa.direction is pb.direction
        assert pa.kind is pb.kind
