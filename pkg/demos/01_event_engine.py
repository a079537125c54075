"""
The event engine
================

Integer-nanosecond clock, ties broken by insertion order, and named random
streams that do not disturb each other.
"""

# %%
import numpy as np

from cvnetsim.engine import NS_PER_MS, Simulator

sim = Simulator(seed=7)
log = []


def ping(tag):
    log.append((sim.now, tag))
    if tag == "a":
        # events may schedule further events
        sim.after(2 * NS_PER_MS, "ping", ping, "a-child")


sim.at(5 * NS_PER_MS, "ping", ping, "b")
sim.at(1 * NS_PER_MS, "ping", ping, "a")
sim.at(5 * NS_PER_MS, "ping", ping, "c")  # same time as "b", fires after it
sim.run_until(10 * NS_PER_MS)
print(log)
print("clock:", sim.now, "ns")

# %%
# Streams are keyed by name. Asking for a new one later leaves the others
# untouched, so adding a random consumer does not shift old baselines.
a = Simulator(3).stream("fading").random(3)
other = Simulator(3)
other.stream("blockage").random(1000)
b = other.stream("fading").random(3)
print(a, b, np.array_equal(a, b))
