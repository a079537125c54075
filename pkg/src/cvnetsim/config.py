"""Scenario configuration: dataclasses, TOML loading and validation.

Every key has a default; unknown keys are rejected. Speeds carry an explicit
unit (``"35 mph"`` or ``"15.6 m/s"``) and rates may be written as
``"250 Kbps"`` / ``"10 Mbps"`` or as plain bits per second.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from .channel import ChannelConfig, PathLossParams, RadioProfile
from .mac_dsrc import DsrcConfig
from .mac_mmwave import McsTable, MmwaveMacConfig, SubframeConfig
from .mobility import MPH_TO_MPS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MobilityConfig:
    mode: str = "synthetic"  # synthetic | trace
    trace_path: Optional[str] = None
    corridor_length: float = 2000.0
    lane_count: int = 4
    lane_width: float = 3.5
    arrival_rate: float = 2.0  # vehicles/s; inf for simultaneous entry
    min_speed_factor: float = 0.7
    warm_start: bool = True
    bs_lateral_offset: float = 10.0
    bs_x: Optional[float] = None  # default: mid-corridor

    def __post_init__(self):
        if self.mode not in ("synthetic", "trace"):
            raise ConfigError(f"mobility.mode: unknown mode {self.mode!r}")
        if self.mode == "trace" and not self.trace_path:
            raise ConfigError("mobility.trace_path: required when mobility.mode = 'trace'")
        if self.corridor_length <= 0 or self.lane_count < 1 or self.lane_width <= 0:
            raise ConfigError("mobility: corridor_length, lane_count and lane_width must be positive")
        if not 0.0 <= self.min_speed_factor <= 1.0:
            raise ConfigError("mobility.min_speed_factor: must lie in [0, 1]")
        if self.arrival_rate <= 0:
            raise ConfigError("mobility.arrival_rate: must be positive")

    @property
    def base_station_xy(self) -> tuple[float, float]:
        x = self.corridor_length / 2 if self.bs_x is None else self.bs_x
        return x, -self.bs_lateral_offset


@dataclass(frozen=True)
class TrafficConfig:
    packet_size: int = 1024
    offered_rate: float = 250e3
    stagger: float = 1e-3  # s between consecutive flow starts

    def __post_init__(self):
        if self.packet_size <= 0:
            raise ConfigError("traffic.packet_size: must be positive")
        if self.offered_rate <= 0:
            raise ConfigError("traffic.offered_rate: must be positive")
        if self.stagger < 0:
            raise ConfigError("traffic.stagger: must be non-negative")


@dataclass(frozen=True)
class ScenarioConfig:
    radio: RadioProfile = field(default_factory=RadioProfile)
    pathloss: PathLossParams = field(default_factory=PathLossParams)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    mac_mmwave: Optional[MmwaveMacConfig] = field(default_factory=MmwaveMacConfig)
    mac_dsrc: Optional[DsrcConfig] = None
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    cv_count: int = 20
    max_speed: float = 45 * MPH_TO_MPS  # m/s
    duration: float = 100.0  # s
    warmup: float = 0.0  # s excluded from metrics
    seed: int = 1
    name: str = "custom"

    def __post_init__(self):
        tech = self.radio.tech
        if tech == "mmwave" and self.mac_dsrc is not None:
            raise ConfigError("radio.tech = 'mmwave' conflicts with mac_dsrc section")
        if tech == "dsrc" and self.mac_mmwave is not None:
            raise ConfigError("radio.tech = 'dsrc' conflicts with mac_mmwave section")
        if tech == "mmwave" and self.mac_mmwave is None:
            raise ConfigError("mac_mmwave: required when radio.tech = 'mmwave'")
        if tech == "dsrc" and self.mac_dsrc is None:
            raise ConfigError("mac_dsrc: required when radio.tech = 'dsrc'")
        if self.cv_count <= 0 and self.mobility.mode == "synthetic":
            raise ConfigError("scenario.cv_count: must be positive")
        if self.max_speed <= 0:
            raise ConfigError("scenario.max_speed: must be positive")
        if self.duration <= 0:
            raise ConfigError("scenario.duration: must be positive")
        if not 0 <= self.warmup < self.duration:
            raise ConfigError("scenario.warmup: must lie in [0, duration)")

    @property
    def tech(self) -> str:
        return self.radio.tech

    def with_tech(self, tech: str) -> "ScenarioConfig":
        """Switch radio technology, swapping in that technology's defaults."""
        if tech == self.tech:
            return self
        if tech == "dsrc":
            return replace(self, radio=RadioProfile.dsrc(), mac_mmwave=None, mac_dsrc=DsrcConfig())
        if tech == "mmwave":
            return replace(self, radio=RadioProfile(), mac_dsrc=None, mac_mmwave=MmwaveMacConfig())
        raise ConfigError(f"radio.tech: unknown technology {tech!r}")

    def to_dict(self) -> dict:
        return _jsonable(dataclasses.asdict(self))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


# value parsing -----------------------------------------------------------

_SPEED_RE = re.compile(r"^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*(mph|m/s)\s*$")
_RATE_RE = re.compile(r"^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*(bps|kbps|mbps|gbps)\s*$", re.I)
_RATE_SCALE = {"bps": 1.0, "kbps": 1e3, "mbps": 1e6, "gbps": 1e9}


def parse_speed(value: Any, key: str = "max_speed") -> float:
    """``"35 mph"`` or ``"15.6 m/s"`` to m/s. A bare number is rejected."""
    if isinstance(value, str):
        m = _SPEED_RE.match(value)
        if m:
            number, unit = float(m.group(1)), m.group(2)
            return number * MPH_TO_MPS if unit == "mph" else number
    raise ConfigError(f"{key}: expected a speed with unit suffix ('35 mph' or '15.6 m/s'), got {value!r}")


def parse_rate(value: Any, key: str = "offered_rate") -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        m = _RATE_RE.match(value)
        if m:
            return float(m.group(1)) * _RATE_SCALE[m.group(2).lower()]
    raise ConfigError(f"{key}: expected bits/s or a string like '250 Kbps', got {value!r}")


# TOML loading ------------------------------------------------------------

_SCENARIO_KEYS = {"cv_count", "max_speed", "duration", "warmup", "seed", "name", "preset"}
_SECTIONS = {"scenario", "radio", "pathloss", "channel", "mobility", "traffic", "mac_mmwave", "mac_dsrc"}


def _section_fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _check_keys(section: str, data: dict, allowed: set[str]) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")


def _build(cls, section: str, data: dict, base=None, converters=None):
    converters = converters or {}
    _check_keys(section, data, _section_fields(cls))
    kwargs = {}
    for key, value in data.items():
        if key in converters:
            value = converters[key](value, f"{section}.{key}")
        kwargs[key] = value
    try:
        return replace(base, **kwargs) if base is not None else cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


def _float_or_inf(value, key):
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError(f"{key}: expected a number or 'inf', got {value!r}")


def _optional_int(value, key):
    if value in ("none", "None", "unlimited"):
        return None
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    raise ConfigError(f"{key}: expected an integer or 'unlimited', got {value!r}")


def config_from_dict(data: dict, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from nested TOML-like tables.

    ``scenario.preset`` (or ``base``) selects the starting point; other keys
    override it.
    """
    _check_keys("<top level>", data, _SECTIONS)
    scen = dict(data.get("scenario", {}))
    _check_keys("scenario", scen, _SCENARIO_KEYS)
    if "preset" in scen:
        from .presets import install_preset
        base = install_preset(scen.pop("preset"))
    cfg = base or ScenarioConfig()

    radio_data = dict(data.get("radio", {}))
    tech = radio_data.get("tech", cfg.tech)
    has_mm, has_dsrc = "mac_mmwave" in data, "mac_dsrc" in data
    if tech == "dsrc" and has_mm:
        raise ConfigError("radio.tech = 'dsrc' conflicts with [mac_mmwave] section; "
                          "remove mac_mmwave or set radio.tech = 'mmwave'")
    if tech == "mmwave" and has_dsrc:
        raise ConfigError("radio.tech = 'mmwave' conflicts with [mac_dsrc] section; "
                          "remove mac_dsrc or set radio.tech = 'dsrc'")
    if tech not in ("mmwave", "dsrc"):
        raise ConfigError(f"radio.tech: unknown technology {tech!r}")
    cfg_tech = cfg.with_tech(tech)

    radio = _build(RadioProfile, "radio", radio_data, cfg_tech.radio, {"fading_m": _float_or_inf})
    pathloss = _build(PathLossParams, "pathloss", data.get("pathloss", {}), cfg_tech.pathloss)
    channel = _build(ChannelConfig, "channel", data.get("channel", {}), cfg_tech.channel)
    mobility = _build(MobilityConfig, "mobility", data.get("mobility", {}), cfg_tech.mobility,
                      {"arrival_rate": _float_or_inf})
    traffic = _build(TrafficConfig, "traffic", data.get("traffic", {}), cfg_tech.traffic,
                     {"offered_rate": parse_rate})

    mac_mmwave = cfg_tech.mac_mmwave
    if has_mm:
        mm = dict(data["mac_mmwave"])
        sub_keys = _section_fields(SubframeConfig)
        sub = {k: mm.pop(k) for k in list(mm) if k in sub_keys}
        mcs_rows = mm.pop("mcs_table", None)
        _check_keys("mac_mmwave", mm, _section_fields(MmwaveMacConfig) - {"subframe", "mcs"} | set())
        subframe = _build(SubframeConfig, "mac_mmwave", sub, mac_mmwave.subframe)
        try:
            mcs = McsTable(tuple(tuple(r) for r in mcs_rows)) if mcs_rows is not None else mac_mmwave.mcs
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"mac_mmwave.mcs_table: {exc}") from None
        conv = {"queue_capacity_bytes": _optional_int}
        mac_mmwave = _build(MmwaveMacConfig, "mac_mmwave", mm, replace(mac_mmwave, subframe=subframe, mcs=mcs), conv)

    mac_dsrc = cfg_tech.mac_dsrc
    if has_dsrc:
        mac_dsrc = _build(DsrcConfig, "mac_dsrc", data["mac_dsrc"], mac_dsrc,
                          {"channel_bit_rate": parse_rate})

    overrides: dict[str, Any] = {}
    for key in ("cv_count", "duration", "warmup", "seed", "name"):
        if key in scen:
            overrides[key] = scen[key]
    if "max_speed" in scen:
        overrides["max_speed"] = parse_speed(scen["max_speed"], "scenario.max_speed")
    for key in ("cv_count", "seed"):
        if key in overrides and (not isinstance(overrides[key], int) or isinstance(overrides[key], bool)):
            raise ConfigError(f"scenario.{key}: expected an integer")
    return replace(cfg_tech, radio=radio, pathloss=pathloss, channel=channel, mobility=mobility,
                   traffic=traffic, mac_mmwave=mac_mmwave, mac_dsrc=mac_dsrc, **overrides)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = config_from_dict(data)
    # relative trace paths resolve against the config file location
    tp = cfg.mobility.trace_path
    if tp and not Path(tp).is_absolute():
        cfg = replace(cfg, mobility=replace(cfg.mobility, trace_path=str(path.parent / tp)))
    return cfg
