"""
Point-cloud matrix and sweep container.

A sweep's points are a numpy structured array with one row per return,
sorted by (azimuth, elevation); in dual mode the two returns of one angle
are adjacent rows, return 1 first.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import SensorModel, spherical_to_cartesian_array

POINT_DTYPE = np.dtype([
    ('range', 'f8'),
    ('azimuth', 'f8'),
    ('elevation', 'f8'),
    ('timestamp', 'f8'),
    ('intensity', 'f8'),
])

BLOCKS_PER_DATAGRAM = 12
RANGE_RESOLUTION = 0.002
INTENSITY_SCALE = 255.0


def empty_points(count=0) -> np.ndarray:
    return np.zeros(count, dtype=POINT_DTYPE)


def make_points(rho, theta, phi, t=0.0, intensity=0.0) -> np.ndarray:
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    points = empty_points(len(rho))
    points['range'] = rho
    points['azimuth'] = theta
    points['elevation'] = phi
    points['timestamp'] = t
    points['intensity'] = intensity
    return points


def sort_points(points: np.ndarray) -> np.ndarray:
    """Stable sort by (azimuth, elevation), keeping return order within an angle."""
    order = np.lexsort((points['elevation'], points['azimuth']))
    return points[order]


def quantize_range(rho):
    """Snap ranges to the 2 mm wire resolution."""
    return np.rint(np.asarray(rho, dtype=float) / RANGE_RESOLUTION) * RANGE_RESOLUTION


def quantize_intensity(intensity):
    return np.rint(np.asarray(intensity, dtype=float) * INTENSITY_SCALE) / INTENSITY_SCALE


def azimuths_per_datagram(returns: int) -> int:
    return BLOCKS_PER_DATAGRAM // returns


def datagram_timestamps_us(start_us: int, sensor: SensorModel, returns: int = 1) -> np.ndarray:
    """Timestamp (us) of every datagram of a sweep starting at start_us."""
    per = azimuths_per_datagram(returns)
    count = -(-sensor.azimuth_count // per)
    offsets = np.rint(np.arange(count) * per * sensor.firing_interval * 1e6).astype(np.int64)
    return int(start_us) + offsets


def point_times(azimuth_index, start_us: int, sensor: SensorModel, returns: int = 1) -> np.ndarray:
    """
    Per-point timestamps in seconds.

    Datagram d carries start_us + round(d * per * firing_interval * 1e6) and the
    point at azimuth i is fired (i mod per) firing intervals later.
    """
    per = azimuths_per_datagram(returns)
    azimuth_index = np.asarray(azimuth_index, dtype=np.int64)
    stamps = datagram_timestamps_us(start_us, sensor, returns)
    return datagram_point_times(stamps[azimuth_index // per], azimuth_index, sensor, returns)


def datagram_point_times(datagram_us, azimuth_index, sensor: SensorModel, returns: int = 1) -> np.ndarray:
    per = azimuths_per_datagram(returns)
    return (np.asarray(datagram_us, dtype=np.int64) * 1e-6
            + np.mod(azimuth_index, per) * sensor.firing_interval)


@dataclass
class Sweep:
    """One full rotation of returns."""

    points: np.ndarray
    index: int = 0
    timestamp: float = 0.0
    source_datagram_count: int = 0
    mode: str = 'single'
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def start_us(self) -> int:
        return int(round(self.timestamp * 1e6))

    def cartesian(self) -> np.ndarray:
        """Points as an (N, 3) array in the sensor frame."""
        return spherical_to_cartesian_array(self.points['range'], self.points['azimuth'], self.points['elevation'])

    def copy(self) -> 'Sweep':
        return replace(self, points=self.points.copy(), metadata=dict(self.metadata))

    def with_points(self, points) -> 'Sweep':
        return replace(self, points=points, metadata=dict(self.metadata))

    def angles_equal(self, other: 'Sweep') -> bool:
        return (len(self) == len(other)
                and np.array_equal(self.points['azimuth'], other.points['azimuth'])
                and np.array_equal(self.points['elevation'], other.points['elevation']))

    def same_points(self, other: 'Sweep') -> bool:
        return len(self) == len(other) and bool(np.array_equal(self.points, other.points))


def restamp(sweep: Sweep, start_us: int, sensor: SensorModel, index=None) -> Sweep:
    """
    Move a sweep to a new start time using the wire timestamp rule.

    Used by replays, so a replayed sweep is indistinguishable on the wire from
    one captured at start_us.
    """
    returns = 2 if sweep.mode == 'dual' else 1
    points = sweep.points.copy()
    azimuth_index = sensor.azimuth_index(points['azimuth'])
    points['timestamp'] = point_times(azimuth_index, start_us, sensor, returns)
    return replace(
        sweep,
        points=points,
        timestamp=int(start_us) * 1e-6,
        index=sweep.index if index is None else index,
        metadata=dict(sweep.metadata),
    )
