"""Assemble and run one scenario: mobility, channel epochs, flows, MAC, metrics."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .channel import (
    FadingSource,
    blocked_mask,
    dbm_to_mw,
    friis_received_power,
    leakage_interference,
    los_probability,
    mmwave_path_loss,
)
from .config import ScenarioConfig
from .engine import Simulator, seconds_to_ns
from .mac_dsrc import DsrcRsu
from .mac_mmwave import MmwaveCell
from .metrics import FlowStats, MetricsCollector
from .mobility import CorridorGeometry, MobilityModel, NodeDescriptor, Position, generate_corridor, load_ns2_trace
from .traffic import CbrSource, FlowSpec, PacketRecord


@dataclass
class SinrTrace:
    times: np.ndarray
    node_ids: np.ndarray
    sinr_db: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class RunResult:
    config: ScenarioConfig
    seed: int
    run_id: str
    nodes: list[NodeDescriptor]
    flows: list[FlowSpec]
    packets: list[PacketRecord]
    stats: dict[int, FlowStats]
    sinr: SinrTrace
    mobility: MobilityModel
    mac: object
    end_ns: int
    warmup_ns: int
    wall_time: float
    version: str = __version__
    extras: dict = field(default_factory=dict)


def build_mobility(cfg: ScenarioConfig, sim: Simulator) -> MobilityModel:
    mob = cfg.mobility
    if mob.mode == "trace":
        return load_ns2_trace(mob.trace_path)
    geometry = CorridorGeometry(mob.corridor_length, mob.lane_count, mob.lane_width)
    return generate_corridor(
        cfg.cv_count, cfg.max_speed, geometry, mob.arrival_rate, sim.stream("mobility"),
        min_speed_factor=mob.min_speed_factor, warm_start=mob.warm_start,
    )


class _Run:
    def __init__(self, cfg: ScenarioConfig, seed: int, trace_allocations: bool):
        self.cfg = cfg
        self.sim = Simulator(seed)
        self.end_ns = seconds_to_ns(cfg.duration)
        self.warmup_ns = seconds_to_ns(cfg.warmup)
        self.mobility = build_mobility(cfg, self.sim)
        self.vehicle_ids = self.mobility.vehicle_ids
        n = len(self.vehicle_ids)
        bs_id = (max(self.vehicle_ids) + 1) if self.vehicle_ids else 0
        bs_kind = "base-station" if cfg.tech == "mmwave" else "rsu"
        self.bs_xy = np.array(cfg.mobility.base_station_xy, dtype=float)
        self.bs_pos = Position(*cfg.mobility.base_station_xy)
        self.mobility.add_fixed(bs_id, self.bs_pos)
        self.nodes = [NodeDescriptor(v, "vehicle") for v in self.vehicle_ids]
        self.nodes += [NodeDescriptor(bs_id, bs_kind), NodeDescriptor(bs_id + 1, "remote-host")]

        stagger = seconds_to_ns(cfg.traffic.stagger)
        self.flows: list[FlowSpec] = []
        for i, v in enumerate(self.vehicle_ids):
            start = self.mobility.spawn_time(v) + i * stagger
            if start < self.end_ns:
                self.flows.append(FlowSpec(i, v, cfg.traffic.packet_size, cfg.traffic.offered_rate,
                                           start, self.end_ns))
        self.metrics = MetricsCollector([f.flow_id for f in self.flows], self.end_ns, self.warmup_ns)
        self.packets: list[PacketRecord] = []
        self._sinr_t: list[np.ndarray] = []
        self._sinr_n: list[np.ndarray] = []
        self._sinr_v: list[np.ndarray] = []
        self.node_array = np.array(self.vehicle_ids, dtype=np.int64)
        self.period_ns = seconds_to_ns(cfg.channel.update_period)
        self.n = n

        if cfg.tech == "mmwave":
            mac_cfg = cfg.mac_mmwave
            self.backhaul_ns = seconds_to_ns(mac_cfg.backhaul_latency)
            fading = FadingSource(cfg.radio.fading_m, self.sim.stream("fading"))
            self.mac = MmwaveCell(self.sim, mac_cfg, cfg.radio.bandwidth, n, fading,
                                  self.metrics.on_delivered, self.metrics.on_lost, self.end_ns)
            if trace_allocations:
                self.mac.allocation_log = []
            self.noise_mw = dbm_to_mw(cfg.radio.noise_dbm)
            self.sim.at(0, "channel-update", self._mmwave_epoch)
            self._enqueue = self.mac.enqueue
        else:
            mac_cfg = cfg.mac_dsrc
            self.backhaul_ns = seconds_to_ns(mac_cfg.backhaul_latency)
            dest = {f.flow_id: f.dest_node for f in self.flows}
            self.mac = DsrcRsu(self.sim, mac_cfg, cfg.radio, self.bs_pos, self._vehicle_position, dest,
                               self.sim.stream("fading"), self.metrics.on_delivered,
                               self.metrics.on_lost, self.end_ns)
            if trace_allocations:
                self.mac.busy_intervals = []
            self.sim.at(0, "channel-update", self._dsrc_epoch)
            self._enqueue = lambda link, packet: self.mac.enqueue(packet)

        for flow in self.flows:
            CbrSource(self.sim, flow, self._make_sink(flow.flow_id)).start()
            self.sim.at(flow.stop, "flow-stop", _noop)

    def _vehicle_position(self, vehicle: int, t: int) -> Position:
        pos, _ = self.mobility.position_at(vehicle, t)
        return pos

    def _make_sink(self, link: int):
        sim, packets, on_created = self.sim, self.packets, self.metrics.on_created
        enqueue, backhaul = self._enqueue, self.backhaul_ns

        def sink(record: PacketRecord) -> None:
            packets.append(record)
            on_created(record)
            sim.at(sim.now + backhaul, "packet-arrival", enqueue, link, record)

        return sink

    def _record_sinr(self, t: int, active: np.ndarray, sinr: np.ndarray) -> None:
        self._sinr_t.append(np.full(int(active.sum()), t, dtype=np.int64))
        self._sinr_n.append(self.node_array[active])
        self._sinr_v.append(sinr[active])

    def _next_epoch(self, handler) -> None:
        nxt = self.sim.now + self.period_ns
        if nxt <= self.end_ns:
            self.sim.at(nxt, "channel-update", handler)

    def _mmwave_epoch(self) -> None:
        cfg, sim = self.cfg, self.sim
        t = sim.now
        xy, active = self.mobility.positions_at(t)
        d = np.hypot(xy[:, 0] - self.bs_xy[0], xy[:, 1] - self.bs_xy[1])
        mode = cfg.channel.blockage_mode
        if mode == "geometric":
            los = ~blocked_mask(self.bs_xy, xy, active, cfg.channel.blocker_width)
        elif mode == "probabilistic":
            los = sim.stream("blockage").random(self.n) < los_probability(d)
        else:
            los = np.ones(self.n, dtype=bool)
        z = sim.stream("shadowing").standard_normal(self.n)
        p = cfg.pathloss
        sigma = np.where(los, p.shadowing_sigma_los, p.shadowing_sigma_nlos)
        pl = mmwave_path_loss(d, los, p) + sigma * z
        rx_mw = np.power(10.0, (cfg.radio.tx_power + cfg.radio.beam_gain_aligned - pl) / 10.0)
        rx_mw = np.where(active, rx_mw, 0.0)
        interference = leakage_interference(rx_mw, self.mac.overlap_fractions(), cfg.radio.leakage_factor)
        with np.errstate(divide="ignore"):
            sinr = 10.0 * np.log10(rx_mw / (interference + self.noise_mw))
        self.mac.set_cqi(sinr)
        self.los = los
        self._record_sinr(t, active, sinr)
        self._next_epoch(self._mmwave_epoch)

    def _dsrc_epoch(self) -> None:
        cfg = self.cfg
        t = self.sim.now
        xy, active = self.mobility.positions_at(t)
        d = np.maximum(np.hypot(xy[:, 0] - self.bs_xy[0], xy[:, 1] - self.bs_xy[1]), 1e-3)
        pr = friis_received_power(cfg.radio.tx_power, cfg.radio.antenna_gains, d, cfg.radio.wavelength)
        snr = np.asarray(pr, dtype=float) - cfg.radio.noise_dbm
        self._record_sinr(t, active, snr)
        self._next_epoch(self._dsrc_epoch)

    def run(self) -> None:
        self.sim.run_until(self.end_ns)

    def sinr_trace(self) -> SinrTrace:
        if not self._sinr_t:
            return SinrTrace(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
        return SinrTrace(np.concatenate(self._sinr_t), np.concatenate(self._sinr_n),
                         np.concatenate(self._sinr_v))


def _noop() -> None:
    pass


def run_scenario(cfg: ScenarioConfig, seed: Optional[int] = None, trace_allocations: bool = False) -> RunResult:
    """Run ``cfg`` to its horizon and return packets, flow stats and SINR samples."""
    seed = cfg.seed if seed is None else int(seed)
    t0 = time.perf_counter()
    run = _Run(cfg, seed, trace_allocations)
    run.run()
    wall = time.perf_counter() - t0
    return RunResult(
        config=cfg, seed=seed, run_id=f"{cfg.name}-s{seed}", nodes=run.nodes, flows=run.flows,
        packets=run.packets, stats=run.metrics.flows, sinr=run.sinr_trace(), mobility=run.mobility,
        mac=run.mac, end_ns=run.end_ns, warmup_ns=run.warmup_ns, wall_time=wall,
    )
