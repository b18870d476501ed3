"""
Pseudo-camera detectors driven by projected ground truth.

The 2D detector jitters projected boxes in pixels; the monocular 3D detector
perturbs 3D boxes with range-proportional noise along the line of sight, so
its covariance is long in depth and narrow across.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from sensors.camera import CameraModel
from sensors.geometry import OrientedBox
from utils.exceptions import ConfigError

from .detections import BoxDetection

logger = logging.getLogger(__name__)

MIN_SIGMA = 1e-3
FALSE_BOX_PX = (20.0, 200.0)
FALSE_RANGE = (5.0, 60.0)


@dataclass(frozen=True)
class CameraNoiseConfig:
    sigma_px: float = 4.0
    p_fn: float = 0.05
    lambda_fp: float = 0.1
    depth_coeff: float = 0.05
    sigma_lat: float = 0.1
    sigma_height: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.p_fn <= 1.0:
            raise ConfigError(f"p_fn must be in [0, 1], got {self.p_fn}")
        if min(self.sigma_px, self.lambda_fp, self.depth_coeff, self.sigma_lat, self.sigma_height) < 0:
            raise ConfigError("Camera noise parameters must be non-negative")

    @classmethod
    def from_config(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid camera noise section: {e}") from e


def detect_camera_2d(camera_truth, camera: CameraModel, cfg: CameraNoiseConfig, rng: np.random.Generator):
    """
    Noisy 2D boxes from projected truth.

    Args:
        camera_truth: CameraTruth entries for the frame
        camera: Camera whose image bounds clip the boxes
        cfg: Noise configuration
        rng: Seeded generator for this frame

    Returns:
        list[BoxDetection]: camera2d detections
    """
    width, height = camera.image_size
    detections = []
    for truth in camera_truth:
        dropped = rng.random() < cfg.p_fn
        jitter = rng.normal(0.0, cfg.sigma_px, 4) if cfg.sigma_px > 0 else np.zeros(4)
        if dropped:
            continue
        u1, v1, u2, v2 = np.asarray(truth.box2d) + jitter
        u1, u2 = sorted((u1, u2))
        v1, v2 = sorted((v1, v2))
        detections.append(BoxDetection(source='camera2d', score=0.9, box2d=(
            float(np.clip(u1, 0, width)), float(np.clip(v1, 0, height)),
            float(np.clip(u2, 0, width)), float(np.clip(v2, 0, height)),
        )))
    for _ in range(rng.poisson(cfg.lambda_fp)):
        w, h = rng.uniform(*FALSE_BOX_PX, 2)
        u, v = rng.uniform(0, width), rng.uniform(0, height)
        detections.append(BoxDetection(source='camera2d', score=0.5, box2d=(
            float(max(u - w / 2, 0)), float(max(v - h / 2, 0)),
            float(min(u + w / 2, width)), float(min(v + h / 2, height)),
        )))
    return detections


def line_of_sight_covariance(direction_xy, sigma_depth, sigma_lat, sigma_height) -> np.ndarray:
    """3x3 covariance with sigma_depth along the BEV line of sight."""
    c, s = direction_xy
    rotation = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    sigmas = np.maximum([sigma_depth, sigma_lat, sigma_height], MIN_SIGMA)
    return rotation @ np.diag(sigmas ** 2) @ rotation.T


def detect_camera_mono3d(truth_boxes, camera: CameraModel, cfg: CameraNoiseConfig, rng: np.random.Generator):
    """
    Monocular-3D stand-in: truth boxes inside the camera view with depth noise
    proportional to range.

    Args:
        truth_boxes: Iterable of (object id, OrientedBox) in the sensor frame
        camera: Camera defining the view and the line-of-sight origin
        cfg: Noise configuration
        rng: Seeded generator for this frame

    Returns:
        list[BoxDetection]: camera3d detections with position covariance
    """
    origin = np.asarray(camera.mount_position)
    detections = []
    for _, box in truth_boxes:
        center = np.asarray(box.center)
        dropped = rng.random() < cfg.p_fn
        noise = rng.normal(0.0, 1.0, 3)
        if dropped or not camera.covers(center)[0]:
            continue
        offset = center[:2] - origin[:2]
        distance = float(np.hypot(*offset))
        direction = offset / distance
        sigma_depth = cfg.depth_coeff * distance
        lateral = np.array([-direction[1], direction[0]])
        shifted = center.copy()
        shifted[:2] += direction * sigma_depth * noise[0] + lateral * cfg.sigma_lat * noise[1]
        shifted[2] += cfg.sigma_height * noise[2]
        detections.append(BoxDetection(
            source='camera3d',
            score=0.9,
            box=OrientedBox(tuple(shifted), box.dims, box.yaw),
            covariance=line_of_sight_covariance(direction, sigma_depth, cfg.sigma_lat, cfg.sigma_height),
        ))
    for _ in range(rng.poisson(cfg.lambda_fp)):
        distance = rng.uniform(*FALSE_RANGE)
        bearing = rng.uniform(-camera.horizontal_fov / 2, camera.horizontal_fov / 2)
        direction = np.array([math.cos(bearing), math.sin(bearing)])
        center = origin[:2] + distance * direction
        detections.append(BoxDetection(
            source='camera3d',
            score=0.5,
            box=OrientedBox((center[0], center[1], origin[2] - 1.0), (4.0, 1.8, 1.5), bearing),
            covariance=line_of_sight_covariance(direction, cfg.depth_coeff * distance, cfg.sigma_lat, cfg.sigma_height),
        ))
    return detections
