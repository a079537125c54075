"""Per-flow loss, delay and bitrate metrics.

Two independent paths compute the same :class:`FlowStats`: streaming
accumulators fed by the simulation as packets terminate, and
:func:`recompute_oracle`, a brute-force pass over ``packets.csv``.

The delay denominator is the number of *delivered* packets: delay is only
observable for packets that arrive. Kbps is 1000 bit/s. Per-second buckets
use ``floor(t / 1 s)``; ``N`` is the configured measurement horizon.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .engine import NS_PER_MS, NS_PER_S
from .traffic import DELIVERED, IN_FLIGHT, LOST, PacketRecord

PACKET_COLUMNS = [
    "run_id", "flow_id", "seq", "size_bytes", "created_ns", "tx_first_ns",
    "rx_ns", "status", "attempts", "sinr_db",
]


class OracleMismatch(AssertionError):
    pass


class PacketFileError(ValueError):
    pass


@dataclass
class FlowStats:
    flow_id: int = 0
    sent: int = 0  # S
    lost: int = 0  # L
    delivered: int = 0  # P
    delay_sum_ns: int = 0  # sum of D
    bytes_received: int = 0  # sum of R_i
    bytes_transmitted: int = 0  # sum of T_i
    duration_ns: int = 0  # N
    rx_buckets: dict[int, int] = field(default_factory=dict)
    tx_buckets: dict[int, int] = field(default_factory=dict)

    @property
    def in_flight(self) -> int:
        return self.sent - self.lost - self.delivered

    def record_sent(self, created: int, size: int) -> None:
        self.sent += 1
        self.bytes_transmitted += size
        b = created // NS_PER_S
        self.tx_buckets[b] = self.tx_buckets.get(b, 0) + size

    def record_delivered(self, created: int, rx: int, size: int) -> None:
        self.delivered += 1
        self.delay_sum_ns += rx - created
        self.bytes_received += size
        b = rx // NS_PER_S
        self.rx_buckets[b] = self.rx_buckets.get(b, 0) + size

    def record_lost(self) -> None:
        self.lost += 1

    def first_difference(self, other: "FlowStats") -> Optional[str]:
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if a != b:
                return f"{f.name}: {a!r} != {b!r}"
        return None


def packet_loss_ratio(stats: FlowStats) -> Optional[float]:
    """Lost over sent, in percent; ``None`` when nothing was sent."""
    if stats.sent == 0:
        return None
    return 100.0 * stats.lost / stats.sent


def mean_delay(stats: FlowStats) -> Optional[float]:
    """Mean end-to-end delay of delivered packets, in milliseconds."""
    if stats.delivered == 0:
        return None
    return stats.delay_sum_ns / stats.delivered / NS_PER_MS


def throughput(stats: FlowStats) -> float:
    """Received bitrate over the horizon, Kbps."""
    if stats.duration_ns <= 0:
        raise ValueError("duration must be positive")
    return sum(stats.rx_buckets.values()) * 8 / (stats.duration_ns / NS_PER_S) / 1000.0


def tx_bitrate(stats: FlowStats) -> float:
    """Transmitted (offered) bitrate over the horizon, Kbps."""
    if stats.duration_ns <= 0:
        raise ValueError("duration must be positive")
    return sum(stats.tx_buckets.values()) * 8 / (stats.duration_ns / NS_PER_S) / 1000.0


class MetricsCollector:
    """Streaming accumulators, one :class:`FlowStats` per flow.

    Packets created before ``warmup_ns`` are excluded from every counter;
    the horizon ``N`` is then ``end_ns - warmup_ns``. Bucket times are
    measured from time zero of the run either way.
    """

    def __init__(self, flow_ids: Iterable[int], end_ns: int, warmup_ns: int = 0):
        self.warmup_ns = warmup_ns
        self.flows = {
            fid: FlowStats(flow_id=fid, duration_ns=end_ns - warmup_ns) for fid in flow_ids
        }

    def on_created(self, p: PacketRecord) -> None:
        if p.created >= self.warmup_ns:
            self.flows[p.flow_id].record_sent(p.created, p.size)

    def on_delivered(self, p: PacketRecord) -> None:
        if p.created >= self.warmup_ns:
            self.flows[p.flow_id].record_delivered(p.created, p.rx, p.size)

    def on_lost(self, p: PacketRecord) -> None:
        if p.created >= self.warmup_ns:
            self.flows[p.flow_id].record_lost()


# oracle ----------------------------------------------------------------

def read_packets_csv(path: str | Path) -> list[dict]:
    """Parse ``packets.csv`` strictly: header, column count and integer
    fields are checked, and a missing final newline counts as truncation."""
    text = Path(path).read_text()
    if not text:
        raise PacketFileError(f"{path}: empty file (header missing)")
    if not text.endswith("\n"):
        raise PacketFileError(f"{path}: truncated (no newline after last row)")
    rows = list(csv.reader(text.splitlines()))
    if rows[0] != PACKET_COLUMNS:
        raise PacketFileError(f"{path}: unexpected header {rows[0]}")
    out = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(PACKET_COLUMNS):
            raise PacketFileError(f"{path}:{line_no}: expected {len(PACKET_COLUMNS)} fields, got {len(row)}")
        rec = dict(zip(PACKET_COLUMNS, row))
        try:
            for key in ("flow_id", "seq", "size_bytes", "created_ns", "attempts"):
                rec[key] = int(rec[key])
            rec["rx_ns"] = int(rec["rx_ns"]) if rec["rx_ns"] else None
            rec["tx_first_ns"] = int(rec["tx_first_ns"]) if rec["tx_first_ns"] else None
        except ValueError as exc:
            raise PacketFileError(f"{path}:{line_no}: {exc}") from None
        if rec["status"] not in (DELIVERED, LOST, IN_FLIGHT):
            raise PacketFileError(f"{path}:{line_no}: bad status {rec['status']!r}")
        if (rec["status"] == DELIVERED) != (rec["rx_ns"] is not None):
            raise PacketFileError(f"{path}:{line_no}: rx_ns inconsistent with status")
        out.append(rec)
    return out


def recompute_oracle(per_packet_csv: str | Path, duration_ns: int, warmup_ns: int = 0,
                     flow_ids: Optional[Iterable[int]] = None) -> dict[int, FlowStats]:
    """Rebuild every flow's :class:`FlowStats` from raw packet rows."""
    rows = read_packets_csv(per_packet_csv)
    by_flow: dict[int, list[dict]] = defaultdict(list)
    for r in rows:
        by_flow[r["flow_id"]].append(r)
    ids = sorted(set(by_flow) | set(flow_ids or ()))
    result = {}
    for fid in ids:
        mine = [r for r in by_flow.get(fid, []) if r["created_ns"] >= warmup_ns]
        delivered = [r for r in mine if r["status"] == DELIVERED]
        rx_buckets: dict[int, int] = {}
        tx_buckets: dict[int, int] = {}
        for r in mine:
            b = r["created_ns"] // NS_PER_S
            tx_buckets[b] = tx_buckets.get(b, 0) + r["size_bytes"]
        for r in delivered:
            b = r["rx_ns"] // NS_PER_S
            rx_buckets[b] = rx_buckets.get(b, 0) + r["size_bytes"]
        result[fid] = FlowStats(
            flow_id=fid,
            sent=len(mine),
            lost=sum(1 for r in mine if r["status"] == LOST),
            delivered=len(delivered),
            delay_sum_ns=sum(r["rx_ns"] - r["created_ns"] for r in delivered),
            bytes_received=sum(r["size_bytes"] for r in delivered),
            bytes_transmitted=sum(r["size_bytes"] for r in mine),
            duration_ns=duration_ns - warmup_ns,
            rx_buckets=rx_buckets,
            tx_buckets=tx_buckets,
        )
    return result


def assert_oracle_equal(streaming: dict[int, FlowStats], oracle: dict[int, FlowStats]) -> None:
    if sorted(streaming) != sorted(oracle):
        raise OracleMismatch(f"flow ids differ: {sorted(streaming)} vs {sorted(oracle)}")
    for fid in sorted(streaming):
        diff = streaming[fid].first_difference(oracle[fid])
        if diff:
            raise OracleMismatch(f"flow {fid}: {diff}")


def delay_percentiles(packets: Iterable[PacketRecord], qs=(50, 95)) -> list[Optional[float]]:
    """Extra delay percentiles in ms (not one of the core metrics)."""
    delays = np.array([p.rx - p.created for p in packets if p.status == DELIVERED], dtype=float)
    if delays.size == 0:
        return [None for _ in qs]
    return [float(np.percentile(delays, q)) / NS_PER_MS for q in qs]
