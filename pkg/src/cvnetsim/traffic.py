"""Constant-bit-rate downlink flows and per-packet records."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .engine import NS_PER_S

DELIVERED = "delivered"
LOST = "lost"
IN_FLIGHT = "in_flight"


@dataclass(frozen=True)
class FlowSpec:
    flow_id: int
    dest_node: int
    packet_size: int  # bytes
    offered_rate: float  # bits/s
    start: int  # ns
    stop: int  # ns

    def __post_init__(self):
        if self.packet_size <= 0 or self.offered_rate <= 0:
            raise ValueError("packet_size and offered_rate must be positive")
        if self.start >= self.stop:
            raise ValueError("flow start must precede stop")

    @property
    def interval_ns(self) -> int:
        return packet_interval_ns(self.packet_size, self.offered_rate)


def packet_interval_ns(packet_size: int, offered_rate: float) -> int:
    """Inter-packet gap of a CBR source, rounded to the nanosecond clock."""
    return int(round(packet_size * 8 * NS_PER_S / offered_rate))


@dataclass(slots=True)
class PacketRecord:
    flow_id: int
    seq: int
    size: int
    created: int
    tx_first: Optional[int] = None
    rx: Optional[int] = None
    status: Optional[str] = None  # None while in flight
    attempts: int = 0
    sinr_at_rx: Optional[float] = None
    # HARQ soft-combining state (linear SINR sum) and the MCS row it was coded with
    harq_sinr_sum: float = 0.0
    mcs_row: int = -1

    @property
    def final_status(self) -> str:
        return self.status or IN_FLIGHT

    @property
    def delay(self) -> Optional[int]:
        return None if self.rx is None else self.rx - self.created


class CbrSource:
    """Emits one packet every ``interval`` from ``flow.start`` until ``flow.stop``.

    ``sink(record)`` receives each packet at creation time; the caller is
    responsible for any backhaul delay before the MAC sees it.
    """

    def __init__(self, sim, flow: FlowSpec, sink):
        self.sim = sim
        self.flow = flow
        self.sink = sink
        self.interval = flow.interval_ns
        self.next_seq = 0

    def start(self) -> None:
        if self.flow.start < self.flow.stop:
            self.sim.at(max(self.flow.start, self.sim.now), "packet-generate", self._generate)

    def _generate(self) -> None:
        flow = self.flow
        record = PacketRecord(flow.flow_id, self.next_seq, flow.packet_size, self.sim.now)
        self.next_seq += 1
        self.sink(record)
        nxt = self.sim.now + self.interval
        if nxt < flow.stop:
            self.sim.at(nxt, "packet-generate", self._generate)


def generate(flow: FlowSpec, horizon: Optional[int] = None) -> list[int]:
    """Creation times (ns) of every packet of ``flow`` (optionally capped at ``horizon``)."""
    stop = flow.stop if horizon is None else min(flow.stop, horizon + 1)
    step = flow.interval_ns
    return list(range(flow.start, stop, step))
