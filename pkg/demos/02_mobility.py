"""
Vehicles on a corridor
======================

Synthetic wrap-around traffic, and the same model read from an
ns2-movements trace.
"""

# %%
import numpy as np

from cvnetsim.engine import NS_PER_S, Simulator
from cvnetsim.mobility import MPH_TO_MPS, CorridorGeometry, generate_corridor, parse_ns2_trace

road = CorridorGeometry(length=2000.0, lane_count=4, lane_width=3.5)
cars = generate_corridor(20, 45 * MPH_TO_MPS, road, arrival=2.0, rng=Simulator(1).stream("mobility"))

print("speeds (m/s):", np.round(np.sort(cars.speeds), 1))
for t in (0, 30, 60):
    xy, active = cars.positions_at(t * NS_PER_S)
    print(f"t={t:>2} s  active={active.sum()}  first three x={np.round(xy[:3, 0], 1)}")

# %%
# An ns2-movements trace: initial positions, then timed setdest commands.
trace = """
$node_(0) set X_ 150.0
$node_(0) set Y_ 5.0
$node_(0) set Z_ 0.0
$ns_ at 2.0 "$node_(0) setdest 250.0 5.0 10.0"
"""
model = parse_ns2_trace(trace)
for t in (0, 2, 7, 12, 20):
    pos, speed = model.position_at(0, t * NS_PER_S)
    print(f"t={t:>2} s  x={pos.x:6.1f}  speed={speed}")
