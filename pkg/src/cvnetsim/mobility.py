"""Node positions over time.

Two sources feed the same interface: ns2-movements traces (the text format
SUMO exports for network simulators) and a synthetic straight corridor with
wrap-around re-entry.
"""

from __future__ import annotations

import bisect
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .engine import NS_PER_S, RngStream

MPH_TO_MPS = 0.44704


class TraceParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TraceValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Waypoint:
    time: int  # ns
    position: Position
    speed: float  # m/s toward the next waypoint


@dataclass(frozen=True)
class CorridorGeometry:
    length: float = 2000.0
    lane_count: int = 4
    lane_width: float = 3.5

    def lane_center(self, lane: int) -> float:
        return (lane + 0.5) * self.lane_width

    @property
    def width(self) -> float:
        return self.lane_count * self.lane_width


@dataclass(frozen=True)
class NodeDescriptor:
    id: int
    kind: str  # "base-station" | "rsu" | "vehicle" | "remote-host"


class MobilityModel:
    """Positions for vehicles (indexed 0..n-1) plus any fixed nodes.

    ``kind`` is ``"trace"`` or ``"synthetic"``; fixed infrastructure nodes are
    registered with :meth:`add_fixed` and never move.
    """

    def __init__(self, kind: str):
        self.kind = kind
        self.fixed: dict[int, Position] = {}
        # trace mode
        self.waypoints: dict[int, list[Waypoint]] = {}
        self._times: dict[int, list[int]] = {}
        # synthetic mode
        self.geometry: Optional[CorridorGeometry] = None
        self.spawn_ns: np.ndarray = np.zeros(0, dtype=np.int64)
        self.speeds: np.ndarray = np.zeros(0)
        self.lanes: np.ndarray = np.zeros(0, dtype=np.int64)
        self.max_speed = 0.0

    # construction -----------------------------------------------------
    def add_fixed(self, node_id: int, position: Position) -> None:
        if node_id in self.fixed or node_id in self.waypoints:
            raise ValueError(f"node id {node_id} already registered")
        self.fixed[node_id] = position

    def set_waypoints(self, node_id: int, waypoints: list[Waypoint]) -> None:
        times = [w.time for w in waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise TraceValidationError(f"node {node_id}: waypoint times not strictly increasing")
        self.waypoints[node_id] = waypoints
        self._times[node_id] = times

    # queries ----------------------------------------------------------
    @property
    def vehicle_ids(self) -> list[int]:
        if self.kind == "synthetic":
            return list(range(len(self.speeds)))
        return sorted(self.waypoints)

    @property
    def vehicle_count(self) -> int:
        return len(self.vehicle_ids)

    def spawn_time(self, node_id: int) -> int:
        if self.kind == "synthetic":
            return max(0, int(self.spawn_ns[node_id]))
        return 0

    def position_at(self, node_id: int, t: int) -> tuple[Position, float]:
        """Position and speed of ``node_id`` at time ``t`` (ns)."""
        if node_id in self.fixed:
            return self.fixed[node_id], 0.0
        if self.kind == "synthetic":
            x, y, active = self._synthetic_xy(np.array([node_id]), t)
            speed = float(self.speeds[node_id]) if active[0] else 0.0
            return Position(float(x[0]), float(y[0])), speed
        return self._trace_position(node_id, t)

    def positions_at(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized vehicle positions: ``(xy[n, 2], active[n])``."""
        if self.kind == "synthetic":
            idx = np.arange(len(self.speeds))
            x, y, active = self._synthetic_xy(idx, t)
            return np.column_stack([x, y]), active
        ids = self.vehicle_ids
        xy = np.empty((len(ids), 2))
        for row, node in enumerate(ids):
            p, _ = self._trace_position(node, t)
            xy[row] = (p.x, p.y)
        return xy, np.ones(len(ids), dtype=bool)

    def unwrapped_distance(self, node_id: int, t: int) -> float:
        """Distance travelled since spawn, ignoring wrap-around (synthetic mode)."""
        elapsed = max(0, t - int(self.spawn_ns[node_id])) / NS_PER_S
        return float(self.speeds[node_id]) * elapsed

    def _synthetic_xy(self, idx: np.ndarray, t: int):
        geo = self.geometry
        elapsed = (t - self.spawn_ns[idx]) / NS_PER_S
        active = elapsed >= 0
        travelled = self.speeds[idx] * np.maximum(elapsed, 0.0)
        x = np.mod(travelled, geo.length)
        y = (self.lanes[idx] + 0.5) * geo.lane_width
        return x, y, active

    def _trace_position(self, node_id: int, t: int) -> tuple[Position, float]:
        wps = self.waypoints[node_id]
        times = self._times[node_id]
        i = bisect.bisect_right(times, t) - 1
        if i < 0:
            return wps[0].position, 0.0
        if i >= len(wps) - 1:
            return wps[-1].position, 0.0
        a, b = wps[i], wps[i + 1]
        frac = (t - a.time) / (b.time - a.time)
        pos = Position(
            a.position.x + frac * (b.position.x - a.position.x),
            a.position.y + frac * (b.position.y - a.position.y),
        )
        return pos, a.speed


# ns2-movements ---------------------------------------------------------

_NUM = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
_SET_RE = re.compile(r"^\$node_\((\d+)\)\s+set\s+([XYZ])_\s+" + _NUM + r"\s*$")
_SETDEST_RE = re.compile(
    r'^\$ns_\s+at\s+' + _NUM + r'\s+"\$node_\((\d+)\)\s+setdest\s+'
    + _NUM + r"\s+" + _NUM + r"\s+" + _NUM + r'\s*"\s*$'
)


def parse_ns2_trace(text: str | Iterable[str]) -> MobilityModel:
    """Parse an ns2-movements trace into per-node waypoint lists.

    A ``setdest`` moves the node in a straight line at the given speed from
    wherever it is at the command time; it stops on arrival or when the next
    command for that node takes over.
    """
    lines = text.splitlines() if isinstance(text, str) else list(text)
    initial: dict[int, dict[str, float]] = {}
    commands: dict[int, list[tuple[float, float, float, float]]] = {}

    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SET_RE.match(line)
        if m:
            node, axis, value = int(m.group(1)), m.group(2), float(m.group(3))
            initial.setdefault(node, {})[axis] = value
            continue
        m = _SETDEST_RE.match(line)
        if m:
            t = float(m.group(1))
            node = int(m.group(2))
            x, y, s = float(m.group(3)), float(m.group(4)), float(m.group(5))
            if node not in initial or "X" not in initial[node] or "Y" not in initial[node]:
                raise TraceValidationError(
                    f"line {line_no}: setdest for node {node} before its initial position"
                )
            if t < 0 or s < 0:
                raise TraceParseError(line_no, "negative time or speed")
            cmds = commands.setdefault(node, [])
            if cmds and t <= cmds[-1][0]:
                raise TraceValidationError(
                    f"line {line_no}: node {node} time {t} is not after {cmds[-1][0]}"
                )
            cmds.append((t, x, y, s))
            continue
        raise TraceParseError(line_no, f"unrecognized statement: {line!r}")

    model = MobilityModel("trace")
    for node in sorted(initial):
        coords = initial[node]
        if "X" not in coords or "Y" not in coords:
            raise TraceValidationError(f"node {node}: incomplete initial position")
        start = Position(coords["X"], coords["Y"])
        model.set_waypoints(node, _waypoints_from_commands(start, commands.get(node, [])))
    return model


def _waypoints_from_commands(start: Position, cmds) -> list[Waypoint]:
    points: list[tuple[int, Position]] = [(0, start)]
    speeds: list[float] = []

    def position_at(t_ns: int) -> Position:
        # position along the last leg at t_ns (legs are already clamped)
        if len(points) == 1 or t_ns >= points[-1][0]:
            return points[-1][1]
        (ta, pa), (tb, pb) = points[-2], points[-1]
        f = (t_ns - ta) / (tb - ta)
        return Position(pa.x + f * (pb.x - pa.x), pa.y + f * (pb.y - pa.y))

    for t, x, y, s in cmds:
        t_ns = int(round(t * NS_PER_S))
        here = position_at(t_ns)
        # truncate a leg still in progress at t_ns
        if t_ns < points[-1][0]:
            points[-1] = (t_ns, here)
        elif t_ns > points[-1][0]:
            speeds.append(0.0)
            points.append((t_ns, here))
        dest = Position(x, y)
        dist = here.distance(dest)
        if dist == 0 or s == 0:
            continue
        arrive = t_ns + int(round(dist / s * NS_PER_S))
        if arrive <= t_ns:
            continue
        speeds.append(s)
        points.append((arrive, dest))

    speeds.append(0.0)
    # drop duplicate-time points left by truncation at the same instant
    out: list[Waypoint] = []
    for (t, p), v in zip(points, speeds):
        if out and t == out[-1].time:
            out[-1] = Waypoint(t, p, v)
        else:
            out.append(Waypoint(t, p, v))
    return out


def load_ns2_trace(path: str | Path) -> MobilityModel:
    return parse_ns2_trace(Path(path).read_text())


# synthetic corridor ----------------------------------------------------

def generate_corridor(
    cv_count: int,
    max_speed: float,
    corridor: CorridorGeometry,
    arrival: float,
    rng: RngStream,
    min_speed_factor: float = 0.7,
    warm_start: bool = True,
) -> MobilityModel:
    """Vehicles entering a straight corridor and wrapping around at its end.

    Inter-arrival gaps are exponential with rate ``arrival`` (vehicles/s, use
    ``math.inf`` for simultaneous entry); each vehicle keeps a constant speed
    drawn from ``[min_speed_factor, 1] * max_speed`` and a uniform lane.

    With ``warm_start`` the whole entry process is shifted into negative time
    so every vehicle has completed at least one lap when the clock starts,
    i.e. the corridor is already past ramp-up at t=0.
    """
    if cv_count <= 0 or max_speed <= 0 or corridor.length <= 0:
        raise ValueError("cv_count, max_speed and corridor length must be positive")
    if math.isinf(arrival):
        gaps = np.zeros(cv_count)
    else:
        gaps = rng.exponential(1.0 / arrival, size=cv_count)
        gaps[0] = 0.0
    spawn = np.cumsum(gaps)
    speeds = rng.uniform(min_speed_factor * max_speed, max_speed, size=cv_count)
    lanes = rng.integers(0, corridor.lane_count, size=cv_count)

    if warm_start:
        slowest = max(min_speed_factor * max_speed, 1e-9)
        spawn = spawn - (spawn[-1] + corridor.length / slowest)

    model = MobilityModel("synthetic")
    model.geometry = corridor
    model.spawn_ns = np.round(spawn * NS_PER_S).astype(np.int64)
    model.speeds = speeds
    model.lanes = lanes.astype(np.int64)
    model.max_speed = max_speed
    return model
