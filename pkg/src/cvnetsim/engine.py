"""Discrete-event engine: integer-nanosecond clock, ordered event queue and
named random streams derived from one master seed."""

from __future__ import annotations

import hashlib
import heapq
from typing import Any, Callable, NamedTuple

import numpy as np

NS_PER_S = 1_000_000_000
NS_PER_MS = 1_000_000
NS_PER_US = 1_000


def seconds_to_ns(seconds: float) -> int:
    return int(round(seconds * NS_PER_S))


def ns_to_seconds(ns: int) -> float:
    return ns / NS_PER_S


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


class Event(NamedTuple):
    # Tuple order drives heap order; `sequence` is unique so the
    # comparison never reaches the handler.
    fire_time: int
    sequence: int
    kind: str
    handler: Callable[..., Any]
    args: tuple = ()


class RngStream:
    """A named, independently seeded numpy Generator."""

    def __init__(self, name: str, master_seed: int):
        self.name = name
        self.master_seed = master_seed
        digest = hashlib.sha256(name.encode("utf-8")).digest()
        words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
        self.seed_sequence = np.random.SeedSequence([int(master_seed), *words])
        self.generator = np.random.Generator(np.random.PCG64(self.seed_sequence))

    def __getattr__(self, attr):
        return getattr(self.generator, attr)

    def __repr__(self) -> str:
        return f"RngStream({self.name!r}, seed={self.master_seed})"


class Simulator:
    """Single-threaded event loop.

    Events fire in ``(fire_time, sequence)`` order, where ``sequence`` is the
    insertion counter, so simultaneous events keep their scheduling order.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.now = 0
        self._queue: list[Event] = []
        self._sequence = 0
        self._streams: dict[str, RngStream] = {}
        self.dispatched = 0

    def make_event(self, fire_time: int, kind: str, handler, *args) -> Event:
        event = Event(int(fire_time), self._sequence, kind, handler, args)
        self._sequence += 1
        return event

    def schedule(self, event: Event) -> None:
        if event.fire_time < self.now:
            raise SchedulingError(
                f"event {event.kind!r} at {event.fire_time} ns is before clock {self.now} ns"
            )
        heapq.heappush(self._queue, event)

    def at(self, fire_time: int, kind: str, handler, *args) -> Event:
        event = self.make_event(fire_time, kind, handler, *args)
        self.schedule(event)
        return event

    def after(self, delay: int, kind: str, handler, *args) -> Event:
        return self.at(self.now + delay, kind, handler, *args)

    def pending(self) -> int:
        return len(self._queue)

    def run_until(self, end: int) -> None:
        """Dispatch every event with ``fire_time <= end``, then set the clock to ``end``."""
        end = int(end)
        queue = self._queue
        pop = heapq.heappop
        while queue and queue[0].fire_time <= end:
            event = pop(queue)
            self.now = event.fire_time
            self.dispatched += 1
            event.handler(*event.args)
        if end > self.now:
            self.now = end

    def stream(self, name: str) -> RngStream:
        stream = self._streams.get(name)
        if stream is None:
            stream = self._streams[name] = RngStream(name, self.seed)
        return stream
