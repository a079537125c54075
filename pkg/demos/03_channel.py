"""
Propagation and SINR
====================

mmWave two-slope path loss with geometric blockage, Friis for DSRC,
Nakagami-m fading, and the SINR that drives link adaptation.
"""

# %%
import numpy as np

from cvnetsim.channel import (
    PathLossParams,
    RadioProfile,
    compute_sinr,
    dbm_to_mw,
    friis_received_power,
    is_blocked,
    mmwave_path_loss,
    nakagami_fading_draw,
)
from cvnetsim.engine import Simulator
from cvnetsim.mobility import Position

params = PathLossParams()
for d in (1, 10, 100, 300):
    print(f"{d:>4} m  LOS {mmwave_path_loss(d, True, params):6.1f} dB   NLOS {mmwave_path_loss(d, False, params):6.1f} dB")

# %%
# A car sitting between the base station and a receiver turns the link NLOS.
bs, rx = Position(1000, -10), Position(1000, 12)
print("blocked:", is_blocked(bs, rx, [Position(1000.5, 2)]), "clear:", not is_blocked(bs, rx, [Position(1040, 2)]))

# %%
dsrc = RadioProfile.dsrc()
for d in (10, 100, 1000):
    print(f"Friis at {d:>4} m: {friis_received_power(dsrc.tx_power, 0.0, d, dsrc.wavelength):6.1f} dBm")

# %%
rng = Simulator(1).stream("fading")
for m in (1, 3, 10):
    g = nakagami_fading_draw(m, rng, size=200_000)
    print(f"m={m:>2}: mean {g.mean():.3f}  var {g.var():.3f} (1/m = {1 / m:.3f})  "
          f"P(gain < -10 dB) = {(g < 0.1).mean():.4f}")

# %%
mm = RadioProfile()
signal = dbm_to_mw(mm.tx_power + mm.beam_gain_aligned - mmwave_path_loss(60.0, True, params))
noise = dbm_to_mw(mm.noise_dbm)
print(f"noise floor {mm.noise_dbm:.1f} dBm; SNR at 60 m {compute_sinr(signal, 0.0, noise):.1f} dB; "
      f"with one co-scheduled beam leaking {compute_sinr(signal, mm.leakage_factor * signal, noise):.1f} dB")
