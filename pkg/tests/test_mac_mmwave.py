import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvnetsim.engine import NS_PER_MS, NS_PER_US, Simulator
from cvnetsim.mac_mmwave import (
    HarqProcess,
    McsTable,
    MmwaveCell,
    MmwaveMacConfig,
    SubframeConfig,
    TxQueue,
    allocation_capacity_bits,
    harq_combine,
    schedule_subframe,
    select_mcs,
)
from cvnetsim.traffic import DELIVERED, LOST, PacketRecord

TABLE = McsTable.default()


# scheduler --------------------------------------------------------------

def test_three_flows_get_8_7_7():
    alloc, last = schedule_subframe([0, 1, 2], 22)
    assert list(alloc.items()) == [(0, 8), (1, 7), (2, 7)]
    assert last == 0


def test_rotation_starts_after_last_served():
    alloc, last = schedule_subframe([0, 1, 2], 22, last_served=0)
    assert list(alloc.items()) == [(1, 8), (2, 7), (0, 7)]
    assert last == 1


def test_single_flow_gets_all_symbols():
    assert schedule_subframe([5], 22)[0] == {5: 22}


def test_no_backlog_empty_subframe():
    assert schedule_subframe([], 22)[0] == {}


def test_more_flows_than_symbols():
    alloc, _ = schedule_subframe(range(30), 22)
    assert len(alloc) == 22 and set(alloc.values()) == {1}


@given(st.sets(st.integers(0, 60), min_size=1, max_size=40), st.integers(1, 48),
       st.one_of(st.none(), st.integers(0, 60)))
def test_allocations_differ_by_at_most_one(flows, symbols, last):
    alloc, _ = schedule_subframe(sorted(flows), symbols, last)
    assert sum(alloc.values()) == symbols
    assert set(alloc) <= flows
    sizes = [alloc.get(f, 0) for f in flows]
    assert max(sizes) - min(sizes) <= 1


@given(st.lists(st.sets(st.integers(0, 9), min_size=1), min_size=2, max_size=30))
def test_round_robin_is_fair_over_time_for_a_fixed_set(rounds):
    # with a stable backlog set, cumulative shares stay within one symbol
    flows = sorted(rounds[0])
    totals = dict.fromkeys(flows, 0)
    last = None
    for _ in rounds:
        alloc, last = schedule_subframe(flows, 22, last)
        for f, s in alloc.items():
            totals[f] += s
    assert max(totals.values()) - min(totals.values()) <= 1


# MCS ----------------------------------------------------------------------

def test_default_table_shape():
    assert len(TABLE.rows) == 8
    assert TABLE.rows[0] == (-5.0, 0.2)
    assert TABLE.rows[-1] == (22.0, 4.8)


def test_outage_below_lowest_row():
    assert select_mcs(-5.01, TABLE) == 0.0
    assert TABLE.row_index(-30.0) == -1


def test_threshold_is_inclusive():
    for i, (s, e) in enumerate(TABLE.rows):
        assert TABLE.row_index(s) == i
        assert select_mcs(s, TABLE) == e


def test_top_row_caps():
    assert select_mcs(80.0, TABLE) == 4.8


def test_table_must_increase():
    with pytest.raises(ValueError):
        McsTable(((0.0, 1.0), (0.0, 2.0)))
    with pytest.raises(ValueError):
        McsTable(((0.0, 2.0), (1.0, 1.0)))


def test_allocation_capacity():
    bits = allocation_capacity_bits(2.0, 1e9, 100e-6 / 24, 8)
    assert bits == pytest.approx(66_667, abs=1)
    assert int(bits // (1024 * 8)) == 8


def test_subframe_numerology():
    sf = SubframeConfig()
    assert sf.data_symbols == 22
    assert sf.symbol_duration == pytest.approx(4.1667e-6, rel=1e-4)
    with pytest.raises(ValueError):
        SubframeConfig(control_symbols=24)


# HARQ ---------------------------------------------------------------------

def test_chase_combining_two_equal_attempts():
    assert harq_combine([0.0, 0.0]) == pytest.approx(3.0103, abs=1e-4)


def test_single_attempt_identity():
    assert harq_combine([7.5]) == pytest.approx(7.5)


def test_harq_process_exhaustion():
    proc = HarqProcess(packet=PacketRecord(0, 0, 100, 0), max_attempts=3)
    proc.sinrs += [0.0] * 3
    assert not proc.exhausted
    proc.sinrs.append(0.0)
    assert proc.exhausted


def test_tx_queue_backlog_and_cap():
    q = TxQueue(2048)
    assert q.push(PacketRecord(0, 0, 1024, 0))
    assert q.push(PacketRecord(0, 1, 1024, 0))
    assert not q.push(PacketRecord(0, 2, 1, 0))
    assert q.backlog == 2048
    assert q.pop().seq == 0 and q.backlog == 1024


# the cell ---------------------------------------------------------------

class Harness:
    def __init__(self, n=1, gains=None, end_ms=1000, **cfg):
        self.sim = Simulator(0)
        self.delivered, self.lost = [], []
        gains = iter(gains) if gains is not None else None
        fading = (lambda: next(gains)) if gains is not None else (lambda: 1.0)
        self.cell = MmwaveCell(self.sim, MmwaveMacConfig(**cfg), 1e9, n, fading,
                               self.delivered.append, self.lost.append, end_ms * NS_PER_MS)

    def send(self, link, count, size=1024, t=0):
        pkts = [PacketRecord(link, i, size, t) for i in range(count)]
        for p in pkts:
            self.sim.at(t, "packet-arrival", self.cell.enqueue, link, p)
        return pkts


def test_packet_delivered_at_subframe_end():
    h = Harness()
    h.cell.set_cqi(np.array([30.0]))
    (p,) = h.send(0, 1)
    h.sim.run_until(NS_PER_MS)
    assert p.status == DELIVERED
    assert p.tx_first == 0 and p.rx == 100 * NS_PER_US
    assert p.attempts == 1


def test_outage_flow_is_not_served():
    h = Harness(n=2)
    h.cell.allocation_log = []
    h.cell.set_cqi(np.array([-20.0, 30.0]))
    a = h.send(0, 3)
    b = h.send(1, 3)
    h.sim.run_until(5 * NS_PER_MS)
    assert all(p.status is None and p.attempts == 0 for p in a)
    assert all(p.status == DELIVERED for p in b)
    assert all(0 not in alloc for alloc in h.cell.allocation_log)


def test_outage_backlog_expires_after_discard_timer():
    h = Harness()
    h.cell.set_cqi(np.array([-20.0]))
    (p,) = h.send(0, 1)
    h.sim.run_until(150 * NS_PER_MS)
    h.cell.set_cqi(np.array([30.0]))
    h.sim.run_until(151 * NS_PER_MS)
    assert p.status == LOST and p.attempts == 0


def test_harq_retransmission_combines():
    row = 3
    cqi = TABLE.rows[row][0]
    h = Harness(gains=[0.5, 0.6])
    h.cell.set_cqi(np.array([cqi]))
    (p,) = h.send(0, 1)
    h.sim.run_until(NS_PER_MS)
    assert p.status == DELIVERED and p.attempts == 2
    assert p.sinr_at_rx == pytest.approx(cqi + 10 * math.log10(1.1))
    assert p.rx == p.tx_first + 200 * NS_PER_US


def test_harq_exhaustion_drops_packet():
    h = Harness(gains=[0.1] * 10)
    h.cell.set_cqi(np.array([10.0]))
    (p,) = h.send(0, 1)
    h.sim.run_until(NS_PER_MS)
    assert p.status == LOST and p.attempts == 4
    assert h.lost == [p]


def test_full_queue_tail_drops():
    h = Harness(queue_capacity_bytes=4096)
    pkts = h.send(0, 6)
    h.sim.run_until(0)
    assert [p.status for p in pkts[4:]] == [LOST, LOST]
    assert all(p.status is None for p in pkts[:4])


def test_delivery_after_horizon_stays_in_flight():
    h = Harness(end_ms=1)
    h.cell.set_cqi(np.array([30.0]))
    (p,) = h.send(0, 1, t=NS_PER_MS - 50 * NS_PER_US)
    h.sim.run_until(NS_PER_MS)
    assert p.status is None


def test_large_packet_waits_for_enough_symbols():
    # at the lowest MCS one subframe of 22 symbols carries ~18 kbit
    h = Harness(queue_capacity_bytes=None)
    h.cell.set_cqi(np.array([-5.0]))
    big, = h.send(0, 1, size=3000)
    h.sim.run_until(NS_PER_MS)
    assert big.status is None and big.attempts == 0


def delivered_count(sinr_db, n=3, per_flow=40):
    h = Harness(n=n)
    h.cell.set_cqi(np.asarray(sinr_db))
    for link in range(n):
        h.send(link, per_flow)
    h.sim.run_until(2 * NS_PER_MS)
    counts = [0] * n
    for p in h.delivered:
        counts[p.flow_id] += 1
    return counts


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 30), min_size=3, max_size=3), st.floats(0, 20))
def test_raising_sinr_never_reduces_delivery(sinrs, boost):
    low = delivered_count(sinrs)
    high = delivered_count([s + boost for s in sinrs])
    assert all(h >= l for h, l in zip(high, low))


def test_overlap_fractions_track_co_scheduling():
    h = Harness(n=3)
    h.cell.set_cqi(np.array([30.0, 30.0, -20.0]))
    h.send(0, 30)
    h.send(1, 3)
    h.sim.run_until(NS_PER_MS)
    co = h.cell.co_schedule_counts()
    frac = h.cell.overlap_fractions()
    assert co[0, 0] >= co[1, 1] > 0
    assert frac[1, 0] == 1.0
    assert frac[0, 1] == pytest.approx(co[0, 1] / co[0, 0])
    assert np.all(frac[:, 2] == 0) and np.all(np.diag(frac) == 0)
