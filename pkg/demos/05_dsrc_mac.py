"""
The DSRC baseline
=================

One roadside unit, one half-duplex channel. Twenty 250 Kbps flows ask for
more airtime than the channel has, so the queue fills and delay climbs.
"""

# %%
from dataclasses import replace

from cvnetsim.mac_dsrc import DsrcConfig, airtime, payload_fraction
from cvnetsim.output import summary_values
from cvnetsim.presets import install_preset
from cvnetsim.scenario import run_scenario

cfg = DsrcConfig()
print(f"airtime per 1024 B frame: {airtime(1024, cfg) * 1e3:.3f} ms, "
      f"goodput ceiling {cfg.channel_bit_rate * payload_fraction(1024, cfg) / 1e6:.2f} Mb/s")
print(f"offered: 20 x 250 Kbps = 5.00 Mb/s, i.e. {20 * 250e3 / 8192 * airtime(1024, cfg):.2f} s of airtime per second")

# %%
res = run_scenario(replace(install_preset("fig5-dsrc-45mph"), duration=20.0), seed=1)
vals = summary_values(res)
print(f"loss {vals['loss_pct']:.1f}%  delay {vals['mean_delay_ms']:.0f} ms  "
      f"throughput {vals['throughput_kbps']:.1f} Kbps per CV")
print("queue at the end:", len(res.mac.queue), "of", res.config.mac_dsrc.queue_capacity,
      " tail drops:", res.mac.queue.drops)
