"""mmWave downlink MAC: TDD subframes, round-robin OFDM-symbol scheduling,
CQI-driven MCS selection and chase-combining HARQ."""

from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .traffic import DELIVERED, LOST, PacketRecord


@dataclass(frozen=True)
class SubframeConfig:
    subframe_duration: float = 100e-6  # s
    symbols_per_subframe: int = 24
    control_symbols: int = 2

    def __post_init__(self):
        if not 0 <= self.control_symbols < self.symbols_per_subframe:
            raise ValueError("control_symbols must be below symbols_per_subframe")
        if self.subframe_duration <= 0:
            raise ValueError("subframe_duration must be positive")

    @property
    def data_symbols(self) -> int:
        return self.symbols_per_subframe - self.control_symbols

    @property
    def symbol_duration(self) -> float:
        return self.subframe_duration / self.symbols_per_subframe


@dataclass(frozen=True)
class McsTable:
    """Rows of ``(min_sinr_db, spectral_efficiency)``, both strictly increasing."""

    rows: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.rows:
            raise ValueError("MCS table must not be empty")
        rows = tuple((float(s), float(e)) for s, e in self.rows)
        object.__setattr__(self, "rows", rows)
        for (s0, e0), (s1, e1) in zip(rows, rows[1:]):
            if not (s1 > s0 and e1 > e0):
                raise ValueError("MCS rows must be strictly increasing in both columns")
        if rows[0][1] <= 0:
            raise ValueError("spectral efficiencies must be positive")
        object.__setattr__(self, "_thresholds", [s for s, _ in rows])

    @classmethod
    def default(cls) -> "McsTable":
        # 8 rows, thresholds evenly spaced in dB from -5 to 22 dB,
        # efficiencies geometric from 0.2 to 4.8 b/s/Hz
        sinrs = np.linspace(-5.0, 22.0, 8)
        effs = np.geomspace(0.2, 4.8, 8)
        return cls(tuple((round(float(s), 4), round(float(e), 4)) for s, e in zip(sinrs, effs)))

    @property
    def thresholds(self) -> list[float]:
        return self._thresholds

    @property
    def outage_threshold(self) -> float:
        return self.rows[0][0]

    @property
    def max_efficiency(self) -> float:
        return self.rows[-1][1]

    def row_index(self, sinr_db: float) -> int:
        """Index of the highest row with ``min_sinr <= sinr_db``; -1 means outage."""
        return bisect.bisect_right(self._thresholds, sinr_db) - 1


def select_mcs(cqi_sinr: float, table: McsTable) -> float:
    """Spectral efficiency for a CQI SINR; 0.0 signals outage."""
    row = table.row_index(cqi_sinr)
    return 0.0 if row < 0 else table.rows[row][1]


def schedule_subframe(
    backlogged: Sequence[int], data_symbols: int, last_served: Optional[int] = None
) -> tuple[dict[int, int], Optional[int]]:
    """Deal ``data_symbols`` one at a time over ``backlogged`` flow ids.

    Dealing starts with the first id after ``last_served`` (ids compared in
    sorted order, wrapping around). Returns the allocation in dealing order
    and the id that received the final symbol, to seed the next subframe.
    """
    flows = sorted(set(backlogged))
    if not flows or data_symbols <= 0:
        return {}, last_served
    if last_served is not None:
        start = bisect.bisect_right(flows, last_served) % len(flows)
        flows = flows[start:] + flows[:start]
    k = len(flows)
    base, extra = divmod(data_symbols, k)
    alloc = {f: base + (1 if i < extra else 0) for i, f in enumerate(flows)}
    alloc = {f: s for f, s in alloc.items() if s > 0}
    last = flows[(data_symbols - 1) % k]
    return alloc, last


@dataclass
class HarqProcess:
    packet: PacketRecord
    max_attempts: int = 3  # retransmissions
    sinrs: list[float] = field(default_factory=list)  # dB per attempt

    @property
    def attempts(self) -> int:
        return len(self.sinrs)

    @property
    def exhausted(self) -> bool:
        return self.attempts >= self.max_attempts + 1


def harq_combine(sinrs_db: Iterable[float]) -> float:
    """Chase combining: linear SINRs of all attempts add up."""
    sinrs_db = list(sinrs_db)
    if not sinrs_db:
        raise ValueError("at least one attempt is required")
    return 10.0 * math.log10(sum(10.0 ** (s / 10.0) for s in sinrs_db))


def allocation_capacity_bits(efficiency: float, bandwidth: float, symbol_duration: float, symbols: int) -> float:
    return efficiency * bandwidth * symbol_duration * symbols


class TxQueue:
    """Per-flow FIFO with a byte backlog counter and an optional byte cap."""

    __slots__ = ("packets", "backlog", "capacity_bytes")

    def __init__(self, capacity_bytes: Optional[int] = None):
        self.packets: deque[PacketRecord] = deque()
        self.backlog = 0
        self.capacity_bytes = capacity_bytes

    def __len__(self) -> int:
        return len(self.packets)

    def push(self, packet: PacketRecord) -> bool:
        if self.capacity_bytes is not None and self.backlog + packet.size > self.capacity_bytes:
            return False
        self.packets.append(packet)
        self.backlog += packet.size
        return True

    def head(self) -> PacketRecord:
        return self.packets[0]

    def pop(self) -> PacketRecord:
        packet = self.packets.popleft()
        self.backlog -= packet.size
        return packet


@dataclass(frozen=True)
class MmwaveMacConfig:
    subframe: SubframeConfig = SubframeConfig()
    mcs: McsTable = field(default_factory=McsTable.default)
    harq_max_retx: int = 3
    queue_capacity_bytes: Optional[int] = 10240
    discard_timer: Optional[float] = 0.1  # s a packet may wait before its first attempt
    backhaul_latency: float = 1e-3  # s

    def __post_init__(self):
        if self.harq_max_retx < 0:
            raise ValueError("harq_max_retx must be non-negative")
        if self.queue_capacity_bytes is not None and self.queue_capacity_bytes <= 0:
            raise ValueError("queue_capacity_bytes must be positive")
        if self.discard_timer is not None and self.discard_timer <= 0:
            raise ValueError("discard_timer must be positive")


class MmwaveCell:
    """One eNB serving a downlink flow per vehicle.

    The owning scenario feeds packets via :meth:`enqueue`, refreshes CQI via
    :meth:`set_cqi` at every channel-update epoch and receives terminal
    packet outcomes through ``on_delivered`` / ``on_lost`` callbacks.
    """

    def __init__(self, sim, cfg: MmwaveMacConfig, bandwidth: float, n_links: int,
                 fading, on_delivered, on_lost, end_ns: int):
        self.sim = sim
        self.cfg = cfg
        self.bandwidth = bandwidth
        self.end_ns = end_ns
        self.fading = fading  # callable () -> linear power gain
        self.on_delivered = on_delivered
        self.on_lost = on_lost
        self.sf_ns = int(round(cfg.subframe.subframe_duration * 1e9))
        self.data_symbols = cfg.subframe.data_symbols
        self.bits_per_symbol_per_eff = bandwidth * cfg.subframe.symbol_duration
        self.max_attempts = cfg.harq_max_retx + 1
        self.discard_ns = None if cfg.discard_timer is None else int(round(cfg.discard_timer * 1e9))
        self.queues = [TxQueue(cfg.queue_capacity_bytes) for _ in range(n_links)]
        self.cqi_sinr = np.full(n_links, -math.inf)
        self.cqi_row = [-1] * n_links
        self._cqi_lin = [0.0] * n_links
        self._backlogged: set[int] = set()
        self._thresholds = cfg.mcs.thresholds
        self._effs = [e for _, e in cfg.mcs.rows]
        self.last_served: Optional[int] = None
        self._next_subframe: Optional[int] = None
        self._last_subframe = -1
        self.n_links = n_links
        # flows served together in each subframe since the last channel update
        self._epoch_served: list[tuple[int, ...]] = []
        # observability
        self.subframes_run = 0
        self.allocation_log: Optional[list[dict[int, int]]] = None
        self.delivered_bits = 0

    # inputs -----------------------------------------------------------
    def enqueue(self, link: int, packet: PacketRecord) -> None:
        if not self.queues[link].push(packet):
            packet.status = LOST
            self.on_lost(packet)
            return
        self._backlogged.add(link)
        if self.cqi_row[link] >= 0:
            self._wake()

    def set_cqi(self, sinr_db: np.ndarray) -> None:
        self.cqi_sinr = np.asarray(sinr_db, dtype=float)
        rows = np.searchsorted(self._thresholds, self.cqi_sinr, side="right") - 1
        self.cqi_row = rows.tolist()
        self._cqi_lin = np.power(10.0, self.cqi_sinr / 10.0).tolist()
        self._epoch_served = []
        if self.eligible_flows():
            self._wake()

    def co_schedule_counts(self) -> np.ndarray:
        """``[j, k]`` = subframes since the last CQI update that served both
        j and k; the diagonal holds j's own scheduled-subframe count."""
        ind = np.zeros((len(self._epoch_served), self.n_links))
        for r, served in enumerate(self._epoch_served):
            ind[r, list(served)] = 1.0
        return (ind.T @ ind).astype(np.int64)

    def overlap_fractions(self) -> np.ndarray:
        """``[j, k]`` = share of j's scheduled subframes that also carried k."""
        co = self.co_schedule_counts().astype(float)
        counts = np.diag(co).copy()
        np.fill_diagonal(co, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(counts[:, None] > 0, co / counts[:, None], 0.0)
        return frac

    # subframe machinery -------------------------------------------------
    def _wake(self) -> None:
        if self._next_subframe is not None:
            return
        now = self.sim.now
        boundary = -(-now // self.sf_ns) * self.sf_ns
        if boundary <= self._last_subframe:
            boundary = self._last_subframe + self.sf_ns
        self._next_subframe = boundary
        self.sim.at(boundary, "subframe-start", self._subframe)

    def eligible_flows(self) -> list[int]:
        row = self.cqi_row
        return sorted(i for i in self._backlogged if row[i] >= 0)

    def _subframe(self) -> None:
        now = self.sim.now
        self._next_subframe = None
        self._last_subframe = now
        eligible = self.eligible_flows()
        if not eligible:
            return
        alloc, self.last_served = schedule_subframe(eligible, self.data_symbols, self.last_served)
        self.subframes_run += 1
        if self.allocation_log is not None:
            self.allocation_log.append(dict(alloc))
        self._epoch_served.append(tuple(alloc))
        rx_time = now + self.sf_ns
        for link, symbols in alloc.items():
            self.transmit_allocation(link, symbols, now, rx_time)
        if self.eligible_flows():
            self._wake()

    def transmit_allocation(self, link: int, symbols: int, now: int, rx_time: int) -> None:
        """Send FIFO packets of ``link`` that fit into ``symbols`` symbols.

        Each packet is coded at its MCS row (fixed at the first attempt so
        retransmissions can be chase-combined) and decoded against that row's
        threshold using the CQI SINR plus a fresh fading draw. The flow stops
        at the first failed decode so delivery order stays FIFO.
        """
        queue = self.queues[link]
        row_now = self.cqi_row[link]
        cqi_lin = self._cqi_lin[link]
        remaining = float(symbols)
        per_sym = self.bits_per_symbol_per_eff
        discard_before = None if self.discard_ns is None else now - self.discard_ns
        while queue.packets:
            packet = queue.packets[0]
            if discard_before is not None and packet.attempts == 0 and packet.created < discard_before:
                queue.pop()
                packet.status = LOST
                self.on_lost(packet)
                continue
            if packet.mcs_row < 0:
                row = row_now
            else:
                row = packet.mcs_row
            need = packet.size * 8 / (self._effs[row] * per_sym)
            if need > remaining + 1e-9:
                break
            remaining -= need
            if packet.tx_first is None:
                packet.tx_first = now
                packet.mcs_row = row
            packet.attempts += 1
            inst = cqi_lin * self.fading()
            packet.harq_sinr_sum += inst
            eff_db = 10.0 * math.log10(packet.harq_sinr_sum)
            if eff_db >= self._thresholds[row]:
                queue.pop()
                if rx_time <= self.end_ns:
                    packet.rx = rx_time
                    packet.status = DELIVERED
                    packet.sinr_at_rx = eff_db
                    self.delivered_bits += packet.size * 8
                    self.on_delivered(packet)
                continue
            if packet.attempts >= self.max_attempts:
                queue.pop()
                packet.status = LOST
                self.on_lost(packet)
                continue
            break
        if not queue.packets:
            self._backlogged.discard(link)
