"""
The mmWave MAC
==============

Round-robin symbol dealing, CQI-to-MCS mapping and chase-combining HARQ,
first piece by piece, then a cell serving three flows.
"""

# %%
import numpy as np

from cvnetsim.engine import NS_PER_MS, Simulator
from cvnetsim.mac_mmwave import (
    McsTable,
    MmwaveCell,
    MmwaveMacConfig,
    allocation_capacity_bits,
    harq_combine,
    schedule_subframe,
)
from cvnetsim.traffic import PacketRecord

alloc, last = None, None
for _ in range(3):
    alloc, last = schedule_subframe([0, 1, 2], 22, last)
    print(alloc)

# %%
table = McsTable.default()
for sinr, eff in table.rows:
    print(f"SINR >= {sinr:5.1f} dB  ->  {eff:.3f} b/s/Hz")
print("2 b/s/Hz x 8 symbols:", round(allocation_capacity_bits(2.0, 1e9, 100e-6 / 24, 8)), "bits")
print("two 0 dB attempts combine to", round(harq_combine([0.0, 0.0]), 2), "dB")

# %%
sim = Simulator(1)
delivered, lost = [], []
cell = MmwaveCell(sim, MmwaveMacConfig(), 1e9, 3, lambda: float(sim.stream("fading").gamma(3, 1 / 3)),
                  delivered.append, lost.append, 50 * NS_PER_MS)
cell.allocation_log = []
cell.set_cqi(np.array([25.0, 8.0, -12.0]))  # the third flow is in outage
for link in range(3):
    for seq in range(30):
        sim.at(seq * NS_PER_MS, "packet-arrival", cell.enqueue, link, PacketRecord(link, seq, 1024, seq * NS_PER_MS))
sim.run_until(50 * NS_PER_MS)

for link in range(3):
    mine = [p for p in delivered if p.flow_id == link]
    delays = [(p.rx - p.created) / 1e6 for p in mine]
    print(f"flow {link}: delivered {len(mine):>2}, lost {sum(p.flow_id == link for p in lost)}, "
          f"mean delay {np.mean(delays) if delays else float('nan'):.3f} ms")
print("subframes used:", cell.subframes_run, " first allocations:", cell.allocation_log[:3])
