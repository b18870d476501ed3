"""
Per-frame LiDAR sweeps and camera truth rendered from a scene.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from sensors.datagrams import datagrams_per_sweep
from sensors.geometry import expected_angle_grid
from sensors.pointcloud import RANGE_RESOLUTION, Sweep, make_points, point_times, quantize_intensity, quantize_range
from sensors.raycast import cast, ray_directions

from .scene import Scene

logger = logging.getLogger(__name__)


@lru_cache(maxsize=8)
def sensor_rays(sensor):
    """Read-only (theta, phi, unit direction) of every grid ray, ordered like expected_angle_grid."""
    grid = expected_angle_grid(sensor)
    rays = (grid[:, 0].copy(), grid[:, 1].copy(), ray_directions(grid[:, 0], grid[:, 1]))
    for array in rays:
        array.setflags(write=False)
    return rays


def render_sweep(scene: Scene, frame_k: int):
    """
    Raycast one sweep of the scene.

    Ranges carry seeded Gaussian noise and are quantized to the wire
    resolution, so the sweep survives a datagram round trip unchanged.

    Returns:
        tuple: (Sweep, [(object id, sensor-frame OrientedBox)])
    """
    if not 0 <= frame_k < scene.frame_count:
        raise ValueError(f"Frame {frame_k} outside scene '{scene.name}' (0..{scene.frame_count - 1})")

    sensor = scene.sensor
    truth = scene.truth_at(frame_k)
    boxes = [t.box_sensor for t in truth]

    theta, phi, directions = sensor_rays(sensor)
    distance, hit = cast(directions, boxes, sensor.mount_height, sensor.max_range, elevations=phi, azimuths=theta)

    rng = np.random.default_rng([scene.seed, frame_k])
    noise = rng.normal(0.0, scene.range_noise, len(distance))
    returned = np.isfinite(distance)
    rho = quantize_range(distance[returned] + noise[returned])
    keep = rho >= RANGE_RESOLUTION
    selected = np.flatnonzero(returned)[keep]
    rho = rho[keep]

    intensity = np.where(hit[selected] >= 0, scene.object_intensity, scene.ground_intensity)
    azimuth_index = selected // sensor.channel_count
    start_us = scene.frame_start_us(frame_k)
    times = point_times(azimuth_index, start_us, sensor, sensor.returns_per_azimuth)
    points = make_points(rho, theta[selected], phi[selected], times, quantize_intensity(intensity))

    if sensor.mode == 'dual':
        # Single-surface world: the last return coincides with the strongest
        points = np.repeat(points, 2)

    sweep = Sweep(
        points=points,
        index=frame_k,
        timestamp=start_us * 1e-6,
        source_datagram_count=datagrams_per_sweep(sensor),
        mode=sensor.mode,
    )
    return sweep, [(t.id, t.box_sensor) for t in truth]


@dataclass(frozen=True)
class CameraTruth:
    id: int
    box2d: tuple
    truncated: bool


def render_camera_truth(scene: Scene, frame_k: int):
    """Projected 2D boxes of every object at least partly in front of the camera and inside the image."""
    out = []
    for truth in scene.truth_at(frame_k):
        projected = scene.camera.project_box(truth.box_sensor)
        if projected is None:
            continue
        rect, truncated = projected
        out.append(CameraTruth(id=truth.id, box2d=rect, truncated=truncated))
    return out
