"""
Geometric LiDAR detector: ground removal, Euclidean clustering, box fitting.

Used by the victim pipelines and, with degraded parameters, by the attacker.
Everything is in the sensor frame (ground at z = -h).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from sensors.geometry import OrientedBox
from sensors.pointcloud import Sweep
from utils.exceptions import ConfigError

from .detections import BoxDetection

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterParams:
    eps: float = 1.0
    min_pts: int = 8
    ground_margin: float = 0.15
    score_norm: float = 50.0
    vehicle_extent: float = 1.0
    length_axis_extent: float = 2.5
    vehicle_min_dims: tuple = (4.0, 1.8, 1.4)
    pedestrian_min_dims: tuple = (0.6, 0.6, 1.5)

    def __post_init__(self):
        object.__setattr__(self, 'vehicle_min_dims', tuple(float(v) for v in self.vehicle_min_dims))
        object.__setattr__(self, 'pedestrian_min_dims', tuple(float(v) for v in self.pedestrian_min_dims))
        if self.eps <= 0 or self.min_pts < 1 or self.score_norm <= 0:
            raise ConfigError("ClusterParams needs eps > 0, min_pts >= 1 and score_norm > 0")

    @classmethod
    def from_config(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid detector section: {e}") from e


def non_ground_mask(points: np.ndarray, sensor_height: float, margin: float) -> np.ndarray:
    """Rows that are not explained by the flat ground at -sensor_height."""
    phi = points['elevation']
    height = points['range'] * np.sin(np.abs(phi))
    ground = (phi < 0.0) & (np.abs(height - sensor_height) <= margin)
    return ~ground


def cluster_points(xyz: np.ndarray, eps: float, min_pts: int):
    """
    Euclidean clusters: connected components of the eps-neighbour graph.

    Returns:
        list[np.ndarray]: row indices per cluster with at least min_pts rows,
        ordered by their first row
    """
    count = len(xyz)
    if count == 0:
        return []
    pairs = cKDTree(xyz).query_pairs(eps, output_type='ndarray')
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(count, count))
    n_components, labels = connected_components(graph, directed=False)
    sizes = np.bincount(labels, minlength=n_components)
    clusters = [np.flatnonzero(labels == label) for label in range(n_components) if sizes[label] >= min_pts]
    clusters.sort(key=lambda rows: rows[0])
    return clusters


def _place(low, high, dim):
    """Center along one axis; a short observed span is the face nearest the sensor (at 0)."""
    if high - low >= dim:
        return (low + high) / 2.0, high - low
    if low >= 0.0:
        return low + dim / 2.0, dim
    if high <= 0.0:
        return high - dim / 2.0, dim
    return (low + high) / 2.0, dim


def fit_box(xyz: np.ndarray, sensor_height: float, params: ClusterParams):
    """
    Oriented box around one cluster.

    The heading is the principal BEV axis when the cluster is long enough
    along it; otherwise the visible face is taken as a rear or front face and
    the heading is the perpendicular axis.

    Returns:
        tuple: (OrientedBox, kind)
    """
    bev = xyz[:, :2]
    if len(bev) >= 2:
        eigvals, eigvecs = np.linalg.eigh(np.cov(bev.T))
        principal = eigvecs[:, np.argmax(eigvals)]
    else:
        principal = np.array([1.0, 0.0])
    perpendicular = np.array([-principal[1], principal[0]])
    spans = [bev @ axis for axis in (principal, perpendicular)]
    extents = [float(s.max() - s.min()) for s in spans]

    if extents[0] >= params.length_axis_extent:
        heading, lateral = principal, perpendicular
        along, across = spans
    else:
        heading, lateral = perpendicular, principal
        along, across = spans[1], spans[0]

    kind = 'car' if max(extents) >= params.vehicle_extent else 'pedestrian'
    min_length, min_width, min_height = params.vehicle_min_dims if kind == 'car' else params.pedestrian_min_dims

    c_along, length = _place(float(along.min()), float(along.max()), min_length)
    c_across, width = _place(float(across.min()), float(across.max()), min_width)
    ground = -sensor_height
    height = max(float(xyz[:, 2].max()) - ground, min_height)

    yaw = math.atan2(heading[1], heading[0])
    if yaw > math.pi / 2:
        yaw -= math.pi
    elif yaw <= -math.pi / 2:
        yaw += math.pi
    center_xy = c_along * heading + c_across * lateral
    box = OrientedBox((center_xy[0], center_xy[1], ground + height / 2.0), (length, width, height), yaw)
    return box, kind


def detect_lidar(sweep: Sweep, sensor_height_est: float, params: ClusterParams = ClusterParams()):
    """
    Detect objects in a sweep.

    Args:
        sweep: Sweep in the sensor frame
        sensor_height_est: Sensor height above ground used for ground removal
        params: Clustering and box-fitting parameters

    Returns:
        list[BoxDetection]: one detection per cluster, ordered by first row
    """
    if len(sweep) == 0:
        return []
    keep = non_ground_mask(sweep.points, sensor_height_est, params.ground_margin)
    xyz = sweep.cartesian()[keep]
    detections = []
    for rows in cluster_points(xyz, params.eps, params.min_pts):
        box, kind = fit_box(xyz[rows], sensor_height_est, params)
        detections.append(BoxDetection(
            source='lidar',
            score=min(1.0, len(rows) / params.score_norm),
            box=box,
            kind=kind,
        ))
    logger.debug(f"Sweep {sweep.index}: {len(detections)} lidar detections from {int(keep.sum())} non-ground points")
    return detections
