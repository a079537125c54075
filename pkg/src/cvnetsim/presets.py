"""Named experiment scenarios.

``fig5-*`` vary the maximum speed for mmWave and DSRC at 20 CVs, ``fig6-*``
compare 20 and 40 CVs at 35/55 mph, ``fig7-*`` raise the per-CV rate from
250 Kbps to 10 Mbps and ``fig8-*`` shrink packets from 1024 to 256 bytes.
``fig9-*`` are the SINR-distribution scenarios.
"""

from __future__ import annotations

from dataclasses import replace

from .config import ScenarioConfig, TrafficConfig
from .mobility import MPH_TO_MPS


class UnknownPreset(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown preset {self.name!r}; available: {', '.join(preset_names())}"


def _scenario(name, tech="mmwave", cv_count=20, mph=45, packet_size=1024, rate=250e3) -> ScenarioConfig:
    cfg = ScenarioConfig().with_tech(tech)
    return replace(
        cfg, name=name, cv_count=cv_count, max_speed=mph * MPH_TO_MPS,
        traffic=TrafficConfig(packet_size=packet_size, offered_rate=rate),
    )


def _build_table() -> dict[str, dict]:
    table: dict[str, dict] = {}
    for tech in ("mmwave", "dsrc"):
        for mph in (35, 45, 55):
            table[f"fig5-{tech}-{mph}mph"] = dict(tech=tech, mph=mph)
    for cv in (20, 40):
        for mph in (35, 55):
            table[f"fig6-{cv}cv-{mph}mph"] = dict(cv_count=cv, mph=mph)
    table["fig7-250kbps"] = dict(rate=250e3)
    table["fig7-10mbps"] = dict(rate=10e6)
    table["fig8-1024b"] = dict(packet_size=1024)
    table["fig8-256b"] = dict(packet_size=256)
    table["fig9-20cv"] = dict(cv_count=20)
    table["fig9-40cv"] = dict(cv_count=40)
    table["fig9-10mbps"] = dict(rate=10e6)
    return table


PRESETS = _build_table()


def preset_names() -> list[str]:
    return list(PRESETS)


def install_preset(name: str) -> ScenarioConfig:
    """Fully populated scenario for a named experiment."""
    try:
        params = PRESETS[name]
    except KeyError:
        raise UnknownPreset(name) from None
    return _scenario(name, **params)


def describe_preset(name: str) -> str:
    cfg = install_preset(name)
    mph = cfg.max_speed / MPH_TO_MPS
    return (f"{name:<20} {cfg.tech:<7} {cfg.cv_count:>3} CVs  {mph:4.0f} mph  "
            f"{cfg.traffic.packet_size:>5} B  {cfg.traffic.offered_rate / 1e3:>7.0f} Kbps")
