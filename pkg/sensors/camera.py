"""
Forward-facing pinhole camera mounted on the ego vehicle.

The camera frame shares the sensor frame's axes (x forward, z up) and sits at
mount_position relative to the LiDAR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from utils.exceptions import ConfigError

from .geometry import OrientedBox, Pose


@dataclass(frozen=True)
class CameraModel:
    focal_length: float = 800.0
    image_size: tuple = (1600, 900)
    mount_position: tuple = (0.5, 0.0, -0.2)
    mount_yaw: float = 0.0
    horizontal_fov: float = math.pi / 2
    max_range: float = 80.0

    NEAR_PLANE = 0.1

    def __post_init__(self):
        object.__setattr__(self, 'image_size', tuple(int(v) for v in self.image_size))
        object.__setattr__(self, 'mount_position', tuple(float(v) for v in self.mount_position))
        if not 0.0 < self.horizontal_fov < math.pi:
            raise ConfigError(f"Camera horizontal_fov must be in (0, pi), got {self.horizontal_fov}")
        if self.focal_length <= 0:
            raise ConfigError("Camera focal_length must be positive")

    @classmethod
    def from_config(cls, data):
        data = dict(data)
        fov = math.radians(float(data.pop('horizontal_fov_deg', 90.0)))
        try:
            return cls(horizontal_fov=fov, **data)
        except TypeError as e:
            raise ConfigError(f"Invalid camera section: {e}") from e

    @property
    def principal_point(self):
        return self.image_size[0] / 2.0, self.image_size[1] / 2.0

    @property
    def mount_pose(self) -> Pose:
        return Pose(self.mount_position, self.mount_yaw)

    def to_camera(self, points_sensor) -> np.ndarray:
        return self.mount_pose.to_local(np.atleast_2d(points_sensor))

    def project(self, points_sensor):
        """
        Pinhole projection u = cx - f*y/x, v = cy - f*z/x.

        Returns:
            tuple: (uv array, depth x along the optical axis)
        """
        cam = self.to_camera(points_sensor)
        cx, cy = self.principal_point
        depth = cam[:, 0]
        with np.errstate(divide='ignore', invalid='ignore'):
            u = cx - self.focal_length * cam[:, 1] / depth
            v = cy - self.focal_length * cam[:, 2] / depth
        return np.stack([u, v], axis=1), depth

    def covers(self, points_sensor) -> np.ndarray:
        """Points inside the horizontal field of view and camera range."""
        cam = self.to_camera(points_sensor)
        bearing = np.arctan2(cam[:, 1], cam[:, 0])
        distance = np.hypot(cam[:, 0], cam[:, 1])
        return (cam[:, 0] > self.NEAR_PLANE) & (np.abs(bearing) <= self.horizontal_fov / 2.0) & (distance <= self.max_range)

    def project_box(self, box: OrientedBox):
        """
        Image-space bounding rectangle of a sensor-frame box.

        Returns:
            tuple | None: ((u1, v1, u2, v2), truncated) or None when the box is
            fully behind the camera or fully outside the image
        """
        corners = box.corners()
        uv, depth = self.project(corners)
        in_front = depth > self.NEAR_PLANE
        if not np.any(in_front):
            return None
        uv = uv[in_front]
        u1, v1 = uv.min(axis=0)
        u2, v2 = uv.max(axis=0)
        width, height = self.image_size
        if u2 < 0 or v2 < 0 or u1 > width or v1 > height:
            return None
        truncated = (not np.all(in_front)) or u1 < 0 or v1 < 0 or u2 > width or v2 > height
        rect = (max(u1, 0.0), max(v1, 0.0), min(u2, float(width)), min(v2, float(height)))
        return tuple(float(v) for v in rect), bool(truncated)


@dataclass(frozen=True)
class CameraView:
    """A camera at a known sensor pose, for projecting world-frame points."""

    camera: CameraModel
    sensor_pose: Pose

    def to_sensor(self, points_world) -> np.ndarray:
        return self.sensor_pose.to_local(np.atleast_2d(np.asarray(points_world, dtype=float)))

    def project_world(self, point_world):
        """Pixel coordinates and depth of a single world point."""
        uv, depth = self.camera.project(self.to_sensor(point_world))
        return uv[0], float(depth[0])

    def covers_world(self, points_world) -> np.ndarray:
        return self.camera.covers(self.to_sensor(points_world))
