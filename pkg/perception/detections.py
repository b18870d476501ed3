"""
Detection container shared by the LiDAR and camera detectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from sensors.geometry import OrientedBox


@dataclass(frozen=True)
class BoxDetection:
    """
    One detection in the sensor frame.

    camera2d detections carry only box2d (u1, v1, u2, v2); lidar and camera3d
    detections carry a 3D box. covariance is the position covariance (3x3)
    reported by detectors with anisotropic noise.
    """

    source: str
    score: float
    box: Optional[OrientedBox] = None
    box2d: Optional[tuple] = None
    covariance: Optional[np.ndarray] = None
    kind: str = 'car'

    SOURCE_CHOICES = ('lidar', 'camera2d', 'camera3d')

    def __post_init__(self):
        if self.source not in self.SOURCE_CHOICES:
            raise ValueError(f"Unknown detection source '{self.source}'")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"Detection score must be in [0, 1], got {self.score}")
        if self.source == 'camera2d':
            if self.box2d is None or self.box is not None:
                raise ValueError("camera2d detections carry box2d only")
        elif self.box is None:
            raise ValueError(f"{self.source} detections need a 3D box")

    @property
    def center(self):
        return self.box.center

    @property
    def center_2d(self):
        u1, v1, u2, v2 = self.box2d
        return (u1 + u2) / 2.0, (v1 + v2) / 2.0


def iou_2d(a, b) -> float:
    """Intersection over union of two (u1, v1, u2, v2) rectangles."""
    iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0
