"""
Flows and named scenarios
=========================

Constant-bit-rate downlink flows and the preset scenarios built from them.
"""

# %%
from cvnetsim.engine import NS_PER_S
from cvnetsim.presets import describe_preset, install_preset, preset_names
from cvnetsim.traffic import FlowSpec, generate, packet_interval_ns

for size, rate in ((1024, 250e3), (256, 250e3), (1024, 10e6)):
    print(f"{size:>5} B at {rate / 1e3:>6.0f} Kbps -> one packet every {packet_interval_ns(size, rate) / 1e6:.4f} ms")

flow = FlowSpec(flow_id=0, dest_node=0, packet_size=1024, offered_rate=250e3, start=0, stop=10 * NS_PER_S)
print(len(generate(flow)), "packets in 10 s")

# %%
for name in preset_names():
    print(describe_preset(name))

cfg = install_preset("fig7-10mbps")
print(cfg.tech, cfg.cv_count, round(cfg.max_speed, 4), "m/s", cfg.traffic)
