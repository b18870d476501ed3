"""
Sensor model, spherical/Cartesian point types and planar poses.

Frames:
    sensor frame: origin at the LiDAR, x forward, z up, ground at z = -mount_height
    world frame:  ground plane z = 0, ego pose (x, y, yaw)
Elevation is negative below the horizon, so ground returns have phi < 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from utils.exceptions import ConfigError, GeometryError

TWO_PI = 2.0 * math.pi
MAX_CHANNELS = 32


def wrap_two_pi(angle):
    """Normalize angles to [0, 2*pi)."""
    wrapped = np.mod(angle, TWO_PI)
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def wrap_pi(angle):
    """Normalize angles to (-pi, pi]."""
    wrapped = math.pi - np.mod(math.pi - np.asarray(angle, dtype=float), TWO_PI)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def rotation_2d(yaw):
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class SphericalPoint:
    """One LiDAR return (rho, theta, phi, t, I)."""

    rho: float
    theta: float
    phi: float
    t: float = 0.0
    intensity: float = 0.0


def spherical_to_cartesian(p: SphericalPoint) -> np.ndarray:
    cos_phi = math.cos(p.phi)
    return np.array([
        p.rho * cos_phi * math.cos(p.theta),
        p.rho * cos_phi * math.sin(p.theta),
        p.rho * math.sin(p.phi),
    ])


def cartesian_to_spherical(v) -> SphericalPoint:
    """
    Inverse of spherical_to_cartesian.

    Raises:
        GeometryError: for the zero vector
    """
    x, y, z = (float(c) for c in v)
    rho = math.sqrt(x * x + y * y + z * z)
    if rho == 0.0:
        raise GeometryError("Cannot convert the zero vector to spherical coordinates")
    horizontal = math.hypot(x, y)
    theta = wrap_two_pi(math.atan2(y, x)) if horizontal > 0.0 else 0.0
    return SphericalPoint(rho=rho, theta=theta, phi=math.atan2(z, horizontal))


def spherical_to_cartesian_array(rho, theta, phi) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    cos_phi = np.cos(phi)
    return np.stack([
        rho * cos_phi * np.cos(theta),
        rho * cos_phi * np.sin(theta),
        rho * np.sin(phi),
    ], axis=-1)


def cartesian_to_spherical_array(xyz):
    """Vectorized conversion returning (rho, theta, phi) arrays."""
    xyz = np.asarray(xyz, dtype=float)
    horizontal = np.hypot(xyz[..., 0], xyz[..., 1])
    rho = np.sqrt(horizontal ** 2 + xyz[..., 2] ** 2)
    if np.any(rho == 0.0):
        raise GeometryError("Cannot convert the zero vector to spherical coordinates")
    theta = wrap_two_pi(np.arctan2(xyz[..., 1], xyz[..., 0]))
    phi = np.arctan2(xyz[..., 2], horizontal)
    return rho, theta, phi


@dataclass(frozen=True)
class SensorModel:
    """
    Spinning LiDAR description.

    Channel c of every datagram block carries elevation_angles[c], so at most
    32 channels are supported.
    """

    elevation_angles: tuple
    rotation_rate: float = 10.0
    firing_interval: float = 1.0 / 18000.0
    max_range: float = 130.0
    mount_height: float = 1.7
    mount_yaw: float = 0.0
    mode: str = 'single'

    MODE_CHOICES = ('single', 'dual')

    def __post_init__(self):
        angles = tuple(float(a) for a in self.elevation_angles)
        object.__setattr__(self, 'elevation_angles', angles)
        if len(angles) < 2:
            raise ConfigError("SensorModel needs at least 2 elevation channels")
        if len(angles) > MAX_CHANNELS:
            raise ConfigError(f"SensorModel supports at most {MAX_CHANNELS} channels, got {len(angles)}")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ConfigError("elevation_angles must be strictly increasing")
        if self.rotation_rate <= 0 or self.firing_interval <= 0:
            raise ConfigError("rotation_rate and firing_interval must be positive")
        if self.max_range <= 0 or self.mount_height <= 0:
            raise ConfigError("max_range and mount_height must be positive")
        if self.mode not in self.MODE_CHOICES:
            raise ConfigError(f"Unknown sensor mode '{self.mode}'")

    @classmethod
    def uniform(cls, channels=32, elevation_min_deg=-30.67, elevation_max_deg=10.67,
                azimuth_count=1800, rotation_rate=10.0, **kwargs):
        """Evenly spaced channels with the firing interval derived from azimuth_count."""
        angles = np.radians(np.linspace(elevation_min_deg, elevation_max_deg, channels))
        return cls(
            elevation_angles=tuple(angles),
            rotation_rate=rotation_rate,
            firing_interval=1.0 / (rotation_rate * azimuth_count),
            **kwargs,
        )

    @classmethod
    def default(cls):
        return cls.uniform()

    @classmethod
    def hdl32e(cls):
        """HDL-32E-like timing: 10 Hz with a 46 us firing cycle."""
        angles = np.radians(np.linspace(-30.67, 10.67, 32))
        return cls(elevation_angles=tuple(angles), rotation_rate=10.0, firing_interval=46e-6)

    @classmethod
    def from_config(cls, data):
        data = dict(data)
        try:
            return cls.uniform(
                channels=int(data.pop('channels')),
                elevation_min_deg=float(data.pop('elevation_min_deg')),
                elevation_max_deg=float(data.pop('elevation_max_deg')),
                azimuth_count=int(data.pop('azimuth_count')),
                rotation_rate=float(data.pop('rotation_rate')),
                **data,
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"Invalid sensor section: {e}") from e

    @property
    def channel_count(self) -> int:
        return len(self.elevation_angles)

    @property
    def azimuth_count(self) -> int:
        return int(round(1.0 / (self.rotation_rate * self.firing_interval)))

    @property
    def azimuth_spacing(self) -> float:
        return TWO_PI / self.azimuth_count

    @property
    def returns_per_azimuth(self) -> int:
        return 2 if self.mode == 'dual' else 1

    @property
    def max_points(self) -> int:
        return self.azimuth_count * self.channel_count * self.returns_per_azimuth

    @property
    def azimuths(self) -> np.ndarray:
        return TWO_PI * np.arange(self.azimuth_count) / self.azimuth_count

    @property
    def elevations(self) -> np.ndarray:
        return np.asarray(self.elevation_angles)

    def azimuth_index(self, theta):
        """Nearest grid azimuth index for each theta."""
        return np.mod(np.rint(np.asarray(theta) / self.azimuth_spacing), self.azimuth_count).astype(np.int64)

    def channel_index(self, phi):
        """Nearest elevation channel index for each phi."""
        elevations = self.elevations
        phi = np.asarray(phi, dtype=float)
        upper = np.clip(np.searchsorted(elevations, phi), 1, len(elevations) - 1)
        lower = upper - 1
        pick_upper = np.abs(elevations[upper] - phi) < np.abs(phi - elevations[lower])
        return np.where(pick_upper, upper, lower).astype(np.int64)

    def channel_half_gap(self, channel):
        """Half the distance to the nearest neighbouring channel."""
        gaps = np.diff(self.elevations)
        left = np.concatenate([[gaps[0]], gaps])
        right = np.concatenate([gaps, [gaps[-1]]])
        return 0.5 * np.minimum(left, right)[channel]


def expected_angle_grid(s: SensorModel) -> np.ndarray:
    """All n*m (theta_i, phi_j) pairs, ordered by (i, j)."""
    theta = np.repeat(s.azimuths, s.channel_count)
    phi = np.tile(s.elevations, s.azimuth_count)
    return np.stack([theta, phi], axis=1)


@dataclass(frozen=True)
class Pose:
    """Planar pose; yaw normalized to (-pi, pi]."""

    position: tuple = (0.0, 0.0, 0.0)
    yaw: float = 0.0

    def __post_init__(self):
        position = tuple(float(c) for c in self.position)
        if len(position) == 2:
            position = position + (0.0,)
        object.__setattr__(self, 'position', position)
        object.__setattr__(self, 'yaw', wrap_pi(float(self.yaw)))

    def to_world(self, local) -> np.ndarray:
        local = np.asarray(local, dtype=float)
        out = np.array(local, copy=True)
        out[..., :2] = local[..., :2] @ rotation_2d(self.yaw).T + np.asarray(self.position[:2])
        out[..., 2] = local[..., 2] + self.position[2]
        return out

    def to_local(self, world) -> np.ndarray:
        world = np.asarray(world, dtype=float)
        out = np.array(world, copy=True)
        out[..., :2] = (world[..., :2] - np.asarray(self.position[:2])) @ rotation_2d(self.yaw)
        out[..., 2] = world[..., 2] - self.position[2]
        return out

    def rotate_to_world(self, vectors) -> np.ndarray:
        """Rotate planar vectors (vx, vy) from the local into the world frame."""
        return np.asarray(vectors, dtype=float) @ rotation_2d(self.yaw).T

    def rotate_to_local(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ rotation_2d(self.yaw)


def sensor_pose(ego: Pose, sensor: SensorModel) -> Pose:
    """Pose of the sensor frame in the world (the inverse of T_L2G)."""
    return Pose(position=(ego.position[0], ego.position[1], sensor.mount_height),
                yaw=ego.yaw + sensor.mount_yaw)


@dataclass(frozen=True)
class OrientedBox:
    """3D box: center, dims (length, width, height), yaw about z."""

    center: tuple
    dims: tuple
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'center', tuple(float(c) for c in self.center))
        object.__setattr__(self, 'dims', tuple(float(d) for d in self.dims))
        object.__setattr__(self, 'yaw', wrap_pi(float(self.yaw)))
        if len(self.center) != 3 or len(self.dims) != 3:
            raise GeometryError("OrientedBox needs a 3-vector center and 3 dims")
        if min(self.dims) <= 0:
            raise GeometryError(f"OrientedBox dims must be positive, got {self.dims}")

    @property
    def length(self) -> float:
        return self.dims[0]

    @property
    def width(self) -> float:
        return self.dims[1]

    @property
    def height(self) -> float:
        return self.dims[2]

    @property
    def bottom(self) -> float:
        return self.center[2] - self.height / 2.0

    def to_local(self, points) -> np.ndarray:
        """Express points in the box's own axes, centered on the box."""
        return Pose(self.center, self.yaw).to_local(points)

    def corners(self) -> np.ndarray:
        l, w, h = (d / 2.0 for d in self.dims)
        signs = np.array([[sx, sy, sz] for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)], dtype=float)
        return Pose(self.center, self.yaw).to_world(signs * np.array([l, w, h]))

    def contains(self, points, inflate=1.0) -> np.ndarray:
        """Boolean mask of points inside the box with dims scaled by inflate."""
        local = self.to_local(np.atleast_2d(points))
        half = np.asarray(self.dims) * inflate / 2.0
        return np.all(np.abs(local) <= half, axis=-1)

    def inflated(self, factor, vertical=True) -> 'OrientedBox':
        l, w, h = self.dims
        return OrientedBox(self.center, (l * factor, w * factor, h * factor if vertical else h), self.yaw)

    def transformed(self, pose: Pose) -> 'OrientedBox':
        """Box expressed in the parent frame of pose (local -> world)."""
        center = pose.to_world(np.asarray(self.center))
        return OrientedBox(tuple(center), self.dims, self.yaw + pose.yaw)

    def relative_to(self, pose: Pose) -> 'OrientedBox':
        """Box expressed in the frame of pose (world -> local)."""
        center = pose.to_local(np.asarray(self.center))
        return OrientedBox(tuple(center), self.dims, self.yaw - pose.yaw)

    def half_extent_along(self, heading) -> float:
        """Half of the box's footprint measured along a planar heading."""
        delta = self.yaw - heading
        return abs(self.length / 2.0 * math.cos(delta)) + abs(self.width / 2.0 * math.sin(delta))
