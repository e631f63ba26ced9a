"""Comparison defenses: FRONT-style front padding and Tamaraw-style regularization.

FRONT leaves real packets untouched (zero latency) and pours a random
number of dummies over the start of the trace, Rayleigh-distributed in
time. Tamaraw resends everything on fixed per-direction clocks and pads
each direction's total count up to a multiple of L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .traces import DefendedPacket, DefendedTrace, Direction, PacketKind, Trace


@dataclass(frozen=True, slots=True)
class FrontParams:
    """N_s / N_c: max server (download) and client (upload) dummy counts;
    W_min / W_max: bounds of the Rayleigh window draw, seconds."""

    N_s: int
    N_c: int
    W_min: float
    W_max: float

    def __post_init__(self):
        if self.N_s < 1 or self.N_c < 1:
            raise ValueError("N_s and N_c must be >= 1")
        if not 0 < self.W_min <= self.W_max:
            raise ValueError("require 0 < W_min <= W_max")


@dataclass(frozen=True, slots=True)
class TamarawParams:
    """rho_out / rho_in: seconds per upload / download slot; L: pad-to multiple."""

    rho_out: float
    rho_in: float
    L: int

    def __post_init__(self):
        if not (self.rho_out > 0 and self.rho_in > 0):
            raise ValueError("rho_out and rho_in must be > 0")
        if self.L < 1:
            raise ValueError("L must be >= 1")


def _front_side(
    rng: np.random.Generator, max_count: int, params: FrontParams
) -> tuple[int, np.ndarray]:
    count = int(rng.integers(1, max_count, endpoint=True))
    window = float(rng.uniform(params.W_min, params.W_max))
    times = np.sort(rng.rayleigh(window, count))
    return count, times


def apply_front(trace: Trace, params: FrontParams, seed: int) -> DefendedTrace:
    """Apply FRONT-style padding; deterministic in the seed.

    Real packets keep their original times. The client side draws a dummy
    count on {1..N_c} and a Rayleigh scale on [W_min, W_max], then samples
    that many upload dummy times; the server side does the same with N_s
    for download dummies. Dummy times are not truncated to the trace
    duration. Draw order is client first, then server.
    """
    rng = np.random.default_rng(seed)
    _, client_times = _front_side(rng, params.N_c, params)
    server_count, server_times = _front_side(rng, params.N_s, params)

    packets = [
        DefendedPacket(p.time, p.direction, PacketKind.REAL, p.time)
        for p in trace.packets
    ]
    packets.extend(
        DefendedPacket(float(t), Direction.UPLOAD, PacketKind.DUMMY)
        for t in client_times
    )
    packets.extend(
        DefendedPacket(float(t), Direction.DOWNLOAD, PacketKind.DUMMY)
        for t in server_times
    )
    packets.sort(key=lambda p: p.send_time)
    return DefendedTrace(tuple(packets), seed=seed, drawn_budget=server_count)


def _tamaraw_direction(
    times: list[float], direction: Direction, rho: float, L: int
) -> list[DefendedPacket]:
    out: list[DefendedPacket] = []
    sent = 0
    available = 0
    k = 0
    while sent < len(times):
        slot = k * rho
        while available < len(times) and times[available] <= slot:
            available += 1
        if sent < available:
            out.append(DefendedPacket(slot, direction, PacketKind.REAL, times[sent]))
            sent += 1
        else:
            out.append(DefendedPacket(slot, direction, PacketKind.DUMMY))
        k += 1
    # Pad the direction up to a positive multiple of L packets.
    target = L * max(1, math.ceil(len(out) / L))
    while len(out) < target:
        out.append(DefendedPacket(k * rho, direction, PacketKind.DUMMY))
        k += 1
    return out


def apply_tamaraw(trace: Trace, params: TamarawParams) -> DefendedTrace:
    """Apply Tamaraw-style constant-rate regularization; fully deterministic.

    Download packets go out on the k*rho_in clock and uploads on k*rho_out,
    each slot carrying the oldest waiting real packet of its direction or a
    dummy. Per direction, slots continue until every real packet has been
    sent and the total count reaches the next positive multiple of L.
    """
    down = _tamaraw_direction(
        trace.times(Direction.DOWNLOAD), Direction.DOWNLOAD, params.rho_in, params.L
    )
    up = _tamaraw_direction(
        trace.times(Direction.UPLOAD), Direction.UPLOAD, params.rho_out, params.L
    )
    merged = sorted(down + up, key=lambda p: p.send_time)
    dummy_downloads = sum(1 for p in down if p.kind is PacketKind.DUMMY)
    return DefendedTrace(tuple(merged), seed=0, drawn_budget=dummy_downloads)
