"""
Attacker situational awareness, derived from sweeps alone.

The attacker knows the sensor model and sees every sweep on the wire; it never
reads ground truth, camera data or victim state. Everything here is in the
sensor frame.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from filterpy.common import Q_discrete_white_noise
from filterpy.kalman import KalmanFilter

from perception.lidar import ClusterParams, detect_lidar
from sensors.geometry import OrientedBox, Pose, SensorModel
from sensors.pointcloud import Sweep
from tracking.association import associate, bev_distance_matrix

from .config import AttackConfig

logger = logging.getLogger(__name__)

BEV_POSITION_STD = 0.3
BEV_INITIAL_VELOCITY_STD = 5.0
BEV_ACCELERATION_VAR = 1.0


def bev_transition(dt: float) -> np.ndarray:
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    return F


class BevTrack:
    """Four-state (x, y, vx, vy) constant-velocity track of an attacker detection."""

    def __init__(self, track_id: int, box: OrientedBox, kind: str, dt: float):
        self.id = track_id
        self.kf = KalmanFilter(dim_x=4, dim_z=2)
        self.kf.x = np.array([[box.center[0]], [box.center[1]], [0.0], [0.0]])
        self.kf.H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
        self.kf.R = np.eye(2) * BEV_POSITION_STD ** 2
        self.kf.P = np.diag([BEV_POSITION_STD ** 2] * 2 + [BEV_INITIAL_VELOCITY_STD ** 2] * 2)
        self.set_dt(dt)
        self.box = box
        self.kind = kind
        self.hits = 1
        self.misses = 0
        self.lifetime = 1
        self.confirmed = False

    def set_dt(self, dt: float):
        self.kf.F = bev_transition(dt)
        self.kf.Q = Q_discrete_white_noise(dim=2, dt=dt, var=BEV_ACCELERATION_VAR, block_size=2, order_by_dim=False)

    def predict(self, dt: float):
        self.set_dt(dt)
        self.kf.predict()
        self.lifetime += 1

    def update(self, box: OrientedBox, kind: str):
        self.kf.update(np.array(box.center[:2]))
        self.box = box
        self.kind = kind
        self.hits += 1
        self.misses = 0

    @property
    def position(self) -> np.ndarray:
        return self.kf.x[:2, 0].copy()

    @property
    def velocity(self) -> np.ndarray:
        return self.kf.x[2:, 0].copy()

    @property
    def bearing(self) -> float:
        x, y = self.position
        return math.atan2(y, x)

    @property
    def range(self) -> float:
        return float(np.hypot(*self.position))

    def estimated_box(self) -> OrientedBox:
        x, y = self.position
        return OrientedBox((x, y, self.box.center[2]), self.box.dims, self.box.yaw)


@dataclass
class MonitorState:
    """Everything the attacker has inferred so far."""

    sensor: SensorModel
    height_samples: deque = field(default_factory=deque)
    height: Optional[float] = None
    tracks: list = field(default_factory=list)
    next_id: int = 1
    frame: int = -1
    last_time: Optional[float] = None

    @classmethod
    def for_sensor(cls, sensor: SensorModel, cfg: AttackConfig = AttackConfig()):
        return cls(sensor=sensor, height_samples=deque(maxlen=cfg.height_max_samples))

    @property
    def sensor_to_ground(self) -> Optional[Pose]:
        """to_world maps sensor-frame points into the ground frame (ground at z = 0)."""
        if self.height is None:
            return None
        return Pose((0.0, 0.0, self.height), 0.0)

    def track(self, track_id) -> Optional[BevTrack]:
        return next((t for t in self.tracks if t.id == track_id), None)


def monitor_height(state: MonitorState, sweep: Sweep, channels: int = 2) -> MonitorState:
    """
    Median sensor-height estimate from the lowest downward channels.

    Every point of those channels contributes h_i = rho_i * sin|phi_i|.
    """
    if len(sweep) == 0:
        return state
    elevations = state.sensor.elevations
    lowest = np.argsort(elevations)[:channels]
    lowest = lowest[elevations[lowest] < 0.0]
    if len(lowest) == 0:
        logger.debug("No downward channels; sensor height unavailable")
        return state
    points = sweep.points
    selected = np.isin(state.sensor.channel_index(points['elevation']), lowest) & (points['elevation'] < 0.0)
    if not np.any(selected):
        return state
    samples = points['range'][selected] * np.sin(np.abs(points['elevation'][selected]))
    state.height_samples.extend(samples.tolist())
    state.height = float(np.median(np.fromiter(state.height_samples, dtype=float)))
    return state


def monitor_objects(state: MonitorState, sweep: Sweep, cfg: AttackConfig = AttackConfig(),
                    params: ClusterParams = ClusterParams(min_pts=12, ground_margin=0.2)) -> MonitorState:
    """Detect with the attacker's own detector and maintain BEV tracks."""
    if state.height is None:
        return state
    nominal = 1.0 / state.sensor.rotation_rate
    dt = nominal if state.last_time is None else sweep.timestamp - state.last_time
    if dt <= 0:
        dt = nominal
    state.last_time = sweep.timestamp
    state.frame += 1

    for track in state.tracks:
        track.predict(dt)

    detections = detect_lidar(sweep, state.height, params)
    if state.tracks and detections:
        cost = bev_distance_matrix([t.position for t in state.tracks], [d.center[:2] for d in detections])
        assignment = associate(cost, cfg.monitor_gate)
        pairs, unmatched_rows, unmatched_cols = assignment.pairs, assignment.unmatched_rows, assignment.unmatched_cols
    else:
        pairs, unmatched_rows, unmatched_cols = (), tuple(range(len(state.tracks))), tuple(range(len(detections)))

    for row, col in pairs:
        state.tracks[row].update(detections[col].box, detections[col].kind)
    for row in unmatched_rows:
        state.tracks[row].misses += 1
    for col in unmatched_cols:
        det = detections[col]
        state.tracks.append(BevTrack(state.next_id, det.box, det.kind, dt))
        state.next_id += 1

    survivors = []
    for track in state.tracks:
        if track.hits >= cfg.monitor_confirm_hits:
            track.confirmed = True
        if track.misses >= cfg.monitor_delete_misses:
            continue
        survivors.append(track)
    state.tracks = survivors
    return state


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def target_scores(tracks, cfg: AttackConfig = AttackConfig()) -> dict:
    """
    Score candidate targets; lower is better, np.inf marks a gated track.

    Soft features |bearing|, |range - range_center| and |lateral velocity| are
    min-max scaled over the gate survivors, passed through a sigmoid and
    multiplied.
    """
    scores = {}
    survivors = []
    for track in tracks:
        vx, vy = track.velocity
        gated = (
            not track.confirmed
            or track.lifetime < cfg.target_min_lifetime
            or abs(track.bearing) > cfg.bearing_limit
            or not cfg.target_range[0] <= track.range <= cfg.target_range[1]
            or not cfg.target_lateral_velocity[0] <= vy <= cfg.target_lateral_velocity[1]
            or not cfg.target_forward_velocity[0] <= vx <= cfg.target_forward_velocity[1]
        )
        scores[track.id] = math.inf
        if not gated:
            survivors.append(track)
    if not survivors:
        return scores

    features = np.array([
        [abs(t.bearing), abs(t.range - cfg.target_range_center), abs(t.velocity[1])] for t in survivors
    ])
    low, high = features.min(axis=0), features.max(axis=0)
    span = np.where(high > low, high - low, 1.0)
    scaled = (features - low) / span
    for track, value in zip(survivors, np.prod(sigmoid(scaled), axis=1)):
        scores[track.id] = float(value)
    return scores


def select_target(state: MonitorState, cfg: AttackConfig = AttackConfig()) -> Optional[int]:
    """Lowest finite score wins; ties go to the lowest track id."""
    scores = target_scores(state.tracks, cfg)
    finite = [(score, track_id) for track_id, score in scores.items() if math.isfinite(score)]
    if not finite:
        return None
    return min(finite)[1]


@dataclass
class TargetLock:
    """Last known target estimate, propagated at constant velocity when the track is lost."""

    id: int
    position: np.ndarray
    velocity: np.ndarray
    box: OrientedBox
    time: float
    lost: bool = False

    @classmethod
    def from_track(cls, track: BevTrack, now: float):
        return cls(id=track.id, position=track.position, velocity=track.velocity, box=track.box, time=now)

    def refresh(self, state: MonitorState, now: float):
        track = state.track(self.id)
        if track is not None:
            self.position, self.velocity, self.box, self.time = track.position, track.velocity, track.box, now
            self.lost = False
        elif not self.lost:
            logger.info(f"Attacker lost target {self.id}; predicting from its last estimate")
            self.lost = True

    def predicted_box(self, now: float) -> OrientedBox:
        x, y = self.position + self.velocity * (now - self.time)
        return OrientedBox((x, y, self.box.center[2]), self.box.dims, self.box.yaw)
