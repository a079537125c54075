"""DSRC roadside unit: one half-duplex channel, FIFO tail-drop queue,
Friis path loss plus Nakagami-m fading at the receiver."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .channel import RadioProfile, friis_received_power, nakagami_fading_draw
from .traffic import DELIVERED, LOST, PacketRecord


@dataclass(frozen=True)
class DsrcConfig:
    channel_bit_rate: float = 6e6
    per_packet_overhead: float = 0.5e-3  # s: preamble, IFS, ack exchange
    queue_capacity: int = 200
    rx_sensitivity: float = -85.0  # dBm
    nakagami_m: float = 3.0
    retry_limit: int = 7
    backhaul_latency: float = 1e-3  # s

    def __post_init__(self):
        if self.channel_bit_rate <= 0:
            raise ValueError("channel_bit_rate must be positive")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be at least 1")
        if not 0 <= self.retry_limit <= 7:
            raise ValueError("retry_limit must lie in 0..7")
        if self.nakagami_m < 0.5:
            raise ValueError("nakagami_m must be >= 0.5")


def airtime(size: int, cfg: DsrcConfig) -> float:
    """Seconds the channel is busy for one ``size``-byte frame."""
    if size <= 0:
        raise ValueError("size must be positive")
    return size * 8 / cfg.channel_bit_rate + cfg.per_packet_overhead


def payload_fraction(size: int, cfg: DsrcConfig) -> float:
    return (size * 8 / cfg.channel_bit_rate) / airtime(size, cfg)


class RsuQueue:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.items: deque[tuple[PacketRecord, int]] = deque()
        self.drops = 0

    def __len__(self) -> int:
        return len(self.items)

    def enqueue(self, packet: PacketRecord, now: int) -> bool:
        if len(self.items) >= self.capacity:
            self.drops += 1
            return False
        self.items.append((packet, now))
        return True


class DsrcRsu:
    """Serializes unicast frames to the vehicles over one shared channel."""

    def __init__(self, sim, cfg: DsrcConfig, profile: RadioProfile, rsu_position,
                 vehicle_position, destinations, fading_rng, on_delivered, on_lost, end_ns: int):
        self.sim = sim
        self.cfg = cfg
        self.profile = profile
        self.rsu_position = rsu_position
        self.vehicle_position = vehicle_position  # callable (vehicle, t) -> Position
        self.destinations = destinations  # flow_id -> vehicle id
        self.fading_rng = fading_rng
        self.on_delivered = on_delivered
        self.on_lost = on_lost
        self.end_ns = end_ns
        self.queue = RsuQueue(cfg.queue_capacity)
        self.busy = False
        self.noise_dbm = profile.noise_dbm
        self.busy_intervals: Optional[list[tuple[int, int]]] = None
        self.delivered_bits = 0

    def enqueue(self, packet: PacketRecord) -> bool:
        if not self.queue.enqueue(packet, self.sim.now):
            packet.status = LOST
            self.on_lost(packet)
            return False
        if not self.busy:
            self._start_next()
        return True

    def received_power(self, vehicle: int, t: int, fading_gain: float) -> float:
        d = max(self.rsu_position.distance(self.vehicle_position(vehicle, t)), 1e-3)
        pr = friis_received_power(self.profile.tx_power, self.profile.antenna_gains, d,
                                  self.profile.wavelength)
        return pr + 10.0 * math.log10(fading_gain)

    def attempt_delivery(self, packet: PacketRecord, vehicle: int, t: int) -> tuple[bool, float, int]:
        """Transmit ``packet`` starting at ``t``; returns ``(delivered, rx_dbm, end_ns)``."""
        end = t + int(round(airtime(packet.size, self.cfg) * 1e9))
        gain = nakagami_fading_draw(self.cfg.nakagami_m, self.fading_rng)
        rx_dbm = self.received_power(vehicle, t, gain)
        return rx_dbm >= self.cfg.rx_sensitivity, rx_dbm, end

    def _start_next(self) -> None:
        if not self.queue.items:
            self.busy = False
            return
        packet, _ = self.queue.items[0]
        now = self.sim.now
        if packet.tx_first is None:
            packet.tx_first = now
        packet.attempts += 1
        ok, rx_dbm, end = self.attempt_delivery(packet, self.destinations[packet.flow_id], now)
        self.busy = True
        if self.busy_intervals is not None:
            self.busy_intervals.append((now, end))
        self.sim.at(end, "tx-end", self._tx_end, packet, ok, rx_dbm)

    def _tx_end(self, packet: PacketRecord, ok: bool, rx_dbm: float) -> None:
        now = self.sim.now
        if ok:
            self.queue.items.popleft()
            packet.rx = now
            packet.status = DELIVERED
            packet.sinr_at_rx = rx_dbm - self.noise_dbm
            self.delivered_bits += packet.size * 8
            self.on_delivered(packet)
        elif packet.attempts > self.cfg.retry_limit:
            self.queue.items.popleft()
            packet.status = LOST
            self.on_lost(packet)
        self._start_next()
