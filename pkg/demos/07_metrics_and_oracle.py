"""
Metrics and their oracle
========================

A run keeps streaming per-flow counters. The same numbers are then rebuilt
from packets.csv alone and compared field by field.
"""

# %%
import tempfile
from dataclasses import replace
from pathlib import Path

from cvnetsim.metrics import assert_oracle_equal, mean_delay, packet_loss_ratio, recompute_oracle, throughput
from cvnetsim.output import write_run
from cvnetsim.presets import install_preset
from cvnetsim.scenario import run_scenario

res = run_scenario(replace(install_preset("fig5-mmwave-45mph"), duration=10.0), seed=3)
for fid in list(res.stats)[:5]:
    s = res.stats[fid]
    print(f"flow {fid}: S={s.sent} P={s.delivered} L={s.lost} in-flight={s.in_flight}  "
          f"loss {packet_loss_ratio(s):5.1f}%  delay {mean_delay(s):6.2f} ms  {throughput(s):6.1f} Kbps")

# %%
out = Path(tempfile.mkdtemp())
paths = write_run(res, out)
oracle = recompute_oracle(paths["packets.csv"], res.end_ns, flow_ids=res.stats)
assert_oracle_equal(res.stats, oracle)
print("oracle agrees on", len(oracle), "flows;", paths["packets.csv"].stat().st_size, "bytes of packet records")
print(paths["summary.csv"].read_text())
