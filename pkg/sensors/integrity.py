"""
First-order receiver integrity indicators.

    zeta_alpha  point count within the one-point-per-angle maximum
    zeta_beta   point count above the majority-return minimum
    zeta_gamma  sweep and datagram timing consistent with recursive interval estimates
    zeta_rho    dual-mode second returns never closer than first returns
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from utils.exceptions import ConfigError

from .datagrams import Datagram, azimuth_index_for_raw
from .geometry import SensorModel
from .pointcloud import Sweep, azimuths_per_datagram

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntegrityConfig:
    alpha: int
    beta: int
    gamma: float = 9.0
    sigma_gamma: float = 1e-3
    sigma_packet: float = 2e-5
    process_noise_fraction: float = 0.01
    drop_failed: bool = False

    def __post_init__(self):
        if not (self.alpha >= self.beta >= 0):
            raise ConfigError(f"IntegrityConfig needs alpha >= beta >= 0, got alpha={self.alpha} beta={self.beta}")
        if self.gamma <= 0 or self.sigma_gamma <= 0 or self.sigma_packet <= 0:
            raise ConfigError("IntegrityConfig gamma, sigma_gamma and sigma_packet must be positive")

    @classmethod
    def for_sensor(cls, sensor: SensorModel, alpha=None, beta_fraction=0.5, **kwargs):
        """alpha = n*m (x2 in dual mode); beta = beta_fraction * n*m."""
        if alpha is None:
            alpha = sensor.max_points
        beta = int(beta_fraction * sensor.azimuth_count * sensor.channel_count)
        return cls(alpha=int(alpha), beta=beta, **kwargs)


@dataclass(frozen=True)
class IntegrityVerdict:
    zeta_alpha: bool
    zeta_beta: bool
    zeta_gamma: bool
    zeta_rho: bool

    @property
    def zeta(self) -> bool:
        return self.zeta_alpha and self.zeta_beta and self.zeta_gamma and self.zeta_rho

    def failed(self):
        return [name for name in ('zeta_alpha', 'zeta_beta', 'zeta_gamma', 'zeta_rho') if not getattr(self, name)]


class TimingEstimator:
    """
    Scalar Kalman estimate of the inter-sweep interval.

    The first timestamp only seeds last_timestamp; later ones are tested and
    then folded into the estimate.
    """

    def __init__(self, nominal_interval: float, sigma: float, process_noise_fraction: float = 0.01):
        self.process_noise = (process_noise_fraction * nominal_interval) ** 2
        self.measurement_noise = sigma ** 2
        self.interval_estimate = nominal_interval
        self.interval_variance = self.process_noise
        self.last_timestamp = None
        self.residual = 0.0

    @classmethod
    def for_sensor(cls, sensor: SensorModel, cfg: IntegrityConfig):
        return cls(1.0 / sensor.rotation_rate, cfg.sigma_gamma, cfg.process_noise_fraction)

    def update(self, interval: float, steps: int = 1) -> float:
        """Fold in an interval spanning `steps` nominal periods; returns the residual in seconds."""
        self.residual = interval - steps * self.interval_estimate
        predicted = self.interval_variance + self.process_noise
        gain = predicted * steps / (steps ** 2 * predicted + self.measurement_noise)
        self.interval_estimate += gain * self.residual
        self.interval_variance = (1.0 - gain * steps) * predicted
        return self.residual


def check_max_points(sweep: Sweep, cfg: IntegrityConfig) -> bool:
    return len(sweep) <= cfg.alpha


def check_min_points(sweep: Sweep, cfg: IntegrityConfig) -> bool:
    return len(sweep) >= cfg.beta


def check_timestamp(timing: TimingEstimator, new_ts: float, cfg: IntegrityConfig) -> bool:
    if timing.last_timestamp is None:
        timing.last_timestamp = new_ts
        return True
    residual = timing.update(new_ts - timing.last_timestamp)
    timing.last_timestamp = new_ts
    return (residual / cfg.sigma_gamma) ** 2 <= cfg.gamma


def check_dual(sweep: Sweep) -> bool:
    if sweep.mode != 'dual' or len(sweep) < 2:
        return True
    points = sweep.points
    same_angle = ((points['azimuth'][1:] == points['azimuth'][:-1])
                  & (points['elevation'][1:] == points['elevation'][:-1]))
    return bool(np.all(points['range'][1:][same_angle] >= points['range'][:-1][same_angle]))


def check_all(sweep: Sweep, timing: TimingEstimator, ts: float, cfg: IntegrityConfig,
              packets_consistent: bool = True) -> IntegrityVerdict:
    sweep_timing = check_timestamp(timing, ts, cfg)
    verdict = IntegrityVerdict(
        zeta_alpha=check_max_points(sweep, cfg),
        zeta_beta=check_min_points(sweep, cfg),
        zeta_gamma=sweep_timing and packets_consistent,
        zeta_rho=check_dual(sweep),
    )
    if not verdict.zeta:
        logger.warning(f"Sweep {sweep.index} failed integrity: {', '.join(verdict.failed())} (N={len(sweep)})")
    return verdict


class PacketTimingMonitor:
    """
    Datagram timing against a recursive estimate of the firing interval.

    Every interval is spread over the azimuth steps between the two datagram
    starts. A datagram is tested only once two earlier ones have been seen,
    and rejected intervals are left out of the estimate.
    """

    def __init__(self, sensor: SensorModel, cfg: IntegrityConfig):
        self.cfg = cfg
        self.azimuth_count = sensor.azimuth_count
        self.timing = TimingEstimator(sensor.firing_interval, cfg.sigma_packet, cfg.process_noise_fraction)
        self.last_step = None
        self.seen = 0

    def check(self, step: int, timestamp_us: int) -> bool:
        ts = timestamp_us * 1e-6
        consistent = True
        if self.last_step is not None:
            steps = (step - self.last_step) % self.azimuth_count or self.azimuth_count
            interval = ts - self.timing.last_timestamp
            residual = interval - steps * self.timing.interval_estimate
            if self.seen >= 2:
                consistent = (residual / self.cfg.sigma_packet) ** 2 <= self.cfg.gamma
            if consistent:
                self.timing.update(interval, steps)
            else:
                logger.debug(f"Datagram at azimuth {step} off by {residual * 1e6:.1f} us")
        self.timing.last_timestamp = ts
        self.last_step = step
        self.seen += 1
        return consistent


def datagram_times(sweep: Sweep, sensor: SensorModel):
    """
    Start azimuth index and wire timestamp (us) of every datagram with a return.

    Recovered from the point timestamps, which carry the datagram timestamp
    plus the firing offset of their azimuth.
    """
    if len(sweep) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    per = azimuths_per_datagram(2 if sweep.mode == 'dual' else 1)
    azimuth_index = sensor.azimuth_index(sweep.points['azimuth'])
    stamps = np.rint((sweep.points['timestamp'] - np.mod(azimuth_index, per) * sensor.firing_interval) * 1e6)
    starts, first = np.unique(azimuth_index // per * per, return_index=True)
    return starts.astype(np.int64), stamps[first].astype(np.int64)


class IntegrityMonitor:
    """
    Per-stream receiver state: config plus the sweep and datagram timing estimators.

    A receiver that sees the wire calls check_datagram on every packet and then
    check(sweep, packets_checked=True). Offline sweeps have their datagram
    timestamps recovered from the points instead.
    """

    def __init__(self, sensor: SensorModel, cfg: IntegrityConfig):
        self.cfg = cfg
        self.sensor = sensor
        self.timing = TimingEstimator.for_sensor(sensor, cfg)
        self.packets = PacketTimingMonitor(sensor, cfg)
        self.packet_failures = 0

    def check_datagram(self, datagram: Datagram) -> bool:
        valid = datagram.valid_blocks
        if not valid.any():
            return True
        per = azimuths_per_datagram(2 if datagram.is_dual else 1)
        first = int(azimuth_index_for_raw(datagram.azimuth_raw[valid][0], self.sensor))
        consistent = self.packets.check(first // per * per, datagram.timestamp_us)
        if not consistent:
            self.packet_failures += 1
        return consistent

    def check(self, sweep: Sweep, packets_checked: bool = False) -> IntegrityVerdict:
        if not packets_checked:
            for step, stamp in zip(*datagram_times(sweep, self.sensor)):
                if not self.packets.check(int(step), int(stamp)):
                    self.packet_failures += 1
        packets_consistent = self.packet_failures == 0
        self.packet_failures = 0
        return check_all(sweep, self.timing, sweep.timestamp, self.cfg, packets_consistent)
