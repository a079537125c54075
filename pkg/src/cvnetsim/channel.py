"""Propagation, blockage, fading and SINR for the mmWave and DSRC radios."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .mobility import Position

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0
MIN_DISTANCE = 1.0


@dataclass(frozen=True)
class RadioProfile:
    tech: str = "mmwave"
    carrier_frequency: float = 73e9
    bandwidth: float = 1e9
    tx_power: float = 40.0
    noise_figure: float = 5.0
    beam_gain_aligned: float = 27.0
    leakage_factor: float = 0.01
    antenna_gains: float = 0.0
    fading_m: float = 3.0

    def __post_init__(self):
        if self.tech not in ("mmwave", "dsrc"):
            raise ValueError(f"unknown radio tech {self.tech!r}")
        if self.bandwidth <= 0 or self.carrier_frequency <= 0:
            raise ValueError("bandwidth and carrier frequency must be positive")
        if not 0.0 <= self.leakage_factor <= 1.0:
            raise ValueError("leakage_factor must lie in [0, 1]")
        if not self.fading_m >= 0.5:
            raise ValueError("fading_m must be >= 0.5 (or inf for no fading)")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def noise_dbm(self) -> float:
        return thermal_noise_dbm(self.bandwidth, self.noise_figure)

    @classmethod
    def dsrc(cls, **overrides) -> "RadioProfile":
        base = cls(
            tech="dsrc", carrier_frequency=5.9e9, bandwidth=10e6, tx_power=20.0,
            noise_figure=5.0, beam_gain_aligned=0.0, leakage_factor=0.0,
            antenna_gains=0.0, fading_m=3.0,
        )
        return replace(base, **overrides)


@dataclass(frozen=True)
class PathLossParams:
    # Floating-intercept model defaults for 73 GHz street canyons.
    los_intercept: float = 69.8
    los_exponent: float = 2.0
    nlos_intercept: float = 82.7
    nlos_exponent: float = 2.69
    shadowing_sigma_los: float = 5.8
    shadowing_sigma_nlos: float = 8.7

    def __post_init__(self):
        if self.los_exponent <= 0 or self.nlos_exponent <= 0:
            raise ValueError("path-loss exponents must be positive")
        if self.shadowing_sigma_los < 0 or self.shadowing_sigma_nlos < 0:
            raise ValueError("shadowing sigmas must be non-negative")


@dataclass
class LinkState:
    los: bool = True
    path_loss: float = 0.0
    shadowing: float = 0.0
    beam_gain: float = 0.0
    last_update: int = 0
    small_scale: float = 1.0
    sinr: float = 0.0
    rx_power: float = -math.inf  # dBm, large-scale only
    interference: float = 0.0  # mW


@dataclass(frozen=True)
class SinrSample:
    time: int
    node_id: int
    sinr: float


# unit helpers ----------------------------------------------------------

def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def dbm_to_mw(dbm):
    return _scalar_or_array(np.power(10.0, np.asarray(dbm, dtype=float) / 10.0))


def mw_to_dbm(mw):
    return _scalar_or_array(10.0 * np.log10(np.asarray(mw, dtype=float)))


def thermal_noise_dbm(bandwidth: float, noise_figure: float) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth) + noise_figure


# blockage --------------------------------------------------------------

def is_blocked(tx: Position, rx: Position, vehicles, width: float = 2.0) -> bool:
    """True if any vehicle centre sits within ``width/2`` of the tx-rx segment,
    strictly between its endpoints along the segment direction."""
    dx, dy = rx.x - tx.x, rx.y - tx.y
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0:
        raise ValueError("tx and rx coincide")
    half = width / 2.0
    seg_len = math.sqrt(seg_len2)
    for v in vehicles:
        vx, vy = (v.x, v.y) if isinstance(v, Position) else (v[0], v[1])
        px, py = vx - tx.x, vy - tx.y
        proj = (px * dx + py * dy) / seg_len2
        if not 0.0 < proj < 1.0:
            continue
        perp = abs(px * dy - py * dx) / seg_len
        if perp <= half:
            return True
    return False


def blocked_mask(tx_xy: np.ndarray, rx_xy: np.ndarray, active: np.ndarray, width: float) -> np.ndarray:
    """Vectorized :func:`is_blocked` for every receiver against every other
    active vehicle. ``rx_xy`` is ``(n, 2)``; returns a boolean ``(n,)`` array."""
    n = len(rx_xy)
    if n == 0:
        return np.zeros(0, dtype=bool)
    d = rx_xy - tx_xy  # (n, 2) segment vectors
    dx, dy = d[:, 0:1], d[:, 1:2]
    seg_len2 = (dx * dx + dy * dy)[:, 0]
    p = rx_xy - tx_xy  # candidate blocker offsets from tx, (n, 2)
    # proj[i, k]: position of blocker k along link i; elementwise, not matmul,
    # so rounding matches is_blocked exactly at the endpoints
    proj = (dx * p[None, :, 0] + dy * p[None, :, 1]) / seg_len2[:, None]
    cross = np.abs(dx * p[None, :, 1] - dy * p[None, :, 0])
    perp = cross / np.sqrt(seg_len2)[:, None]
    hit = (proj > 0.0) & (proj < 1.0) & (perp <= width / 2.0) & active[None, :]
    np.fill_diagonal(hit, False)
    return hit.any(axis=1)


def los_probability(d):
    """Distance-based LOS probability used by the probabilistic blockage mode
    (urban micro street-canyon form with 18 m / 36 m breakpoints)."""
    d = np.maximum(np.asarray(d, dtype=float), MIN_DISTANCE)
    return np.minimum(18.0 / d, 1.0) * (1.0 - np.exp(-d / 36.0)) + np.exp(-d / 36.0)


# propagation -----------------------------------------------------------

def mmwave_path_loss(d, los, params: PathLossParams, shadow_draw=0.0):
    """``alpha + 10 n log10(d) + shadow`` with ``(alpha, n)`` picked by ``los``.
    Works on scalars or arrays; distances below 1 m are clamped."""
    d = np.maximum(d, MIN_DISTANCE)
    alpha = np.where(los, params.los_intercept, params.nlos_intercept)
    n = np.where(los, params.los_exponent, params.nlos_exponent)
    pl = alpha + 10.0 * n * np.log10(d) + shadow_draw
    return float(pl) if np.ndim(pl) == 0 else pl


def friis_received_power(tx_power: float, gains: float, d, wavelength: float):
    """Free-space received power in dBm: ``Pt + G - 20 log10(4 pi d / lambda)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    pr = tx_power + gains - 20.0 * np.log10(4.0 * math.pi * d / wavelength)
    return float(pr) if pr.ndim == 0 else pr


def nakagami_fading_draw(m: float, rng, size=None):
    """Nakagami-m power gain: Gamma(shape=m, scale=1/m), unit mean."""
    if m < 0.5:
        raise ValueError("Nakagami shape must be >= 0.5")
    return rng.gamma(m, 1.0 / m, size=size)


def compute_sinr(signal, interference, noise):
    """SINR in dB from linear powers (mW)."""
    if np.any(np.asarray(noise) <= 0):
        raise ValueError("noise power must be positive")
    ratio = np.asarray(signal, dtype=float) / (np.asarray(interference, dtype=float) + noise)
    return _scalar_or_array(10.0 * np.log10(ratio))


# link updates ----------------------------------------------------------

@dataclass(frozen=True)
class ChannelConfig:
    update_period: float = 0.1  # s
    blockage_mode: str = "geometric"  # geometric | probabilistic | off
    blocker_width: float = 2.0

    def __post_init__(self):
        if self.blockage_mode not in ("geometric", "probabilistic", "off"):
            raise ValueError(f"unknown blockage mode {self.blockage_mode!r}")
        if self.update_period <= 0:
            raise ValueError("update_period must be positive")


def update_link(
    link: LinkState,
    tx: Position,
    rx: Position,
    others,
    profile: RadioProfile,
    params: PathLossParams,
    channel: ChannelConfig,
    shadow_z: float,
    t: int,
    interference_mw: float = 0.0,
    los_uniform: Optional[float] = None,
) -> LinkState:
    """Refresh the large-scale terms of one mmWave link.

    ``shadow_z`` is a standard-normal draw scaled by the LOS or NLOS sigma;
    ``interference_mw`` is the leakage from beams serving other vehicles.
    ``los_uniform`` is the uniform draw consumed by the probabilistic LOS mode.
    """
    d = tx.distance(rx)
    if channel.blockage_mode == "geometric":
        los = not is_blocked(tx, rx, others, channel.blocker_width)
    elif channel.blockage_mode == "probabilistic":
        los = bool(los_uniform < float(los_probability(d)))
    else:
        los = True
    sigma = params.shadowing_sigma_los if los else params.shadowing_sigma_nlos
    shadow = sigma * shadow_z
    pl = mmwave_path_loss(d, los, params, 0.0)
    rx_power = profile.tx_power + profile.beam_gain_aligned - pl - shadow
    noise = dbm_to_mw(profile.noise_dbm)
    sinr = compute_sinr(dbm_to_mw(rx_power), interference_mw, noise)
    return replace(
        link, los=los, path_loss=pl, shadowing=shadow, beam_gain=profile.beam_gain_aligned,
        last_update=t, sinr=sinr, rx_power=rx_power, interference=interference_mw,
    )


def leakage_interference(rx_power_mw: np.ndarray, overlap: np.ndarray, leakage: float) -> np.ndarray:
    """Interference at each link from beams scheduled alongside it.

    ``overlap[j, k]`` is the fraction of link j's scheduled subframes in which
    link k was also scheduled; the interference at j is
    ``leakage * sum_k overlap[j, k] * P_k``.
    """
    return leakage * (overlap @ rx_power_mw)


class FadingSource:
    """Per-packet small-scale power gains drawn in blocks from one stream.

    ``m = inf`` disables fading (every gain is exactly 1).
    """

    def __init__(self, m: float, rng, block: int = 4096):
        self.m = m
        self.rng = rng
        self.block = block
        self._buf: list[float] = []
        self._i = 0

    def __call__(self) -> float:
        if math.isinf(self.m):
            return 1.0
        if self._i >= len(self._buf):
            self._buf = nakagami_fading_draw(self.m, self.rng, self.block).tolist()
            self._i = 0
        value = self._buf[self._i]
        self._i += 1
        return value
