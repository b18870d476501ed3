"""
Ten-state box tracker: (px, py, pz, vx, vy, vz, l, w, h, yaw).

Constant-velocity motion, constant box. All tracks live in the world frame.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from sensors.geometry import OrientedBox, wrap_pi
from utils.exceptions import ConfigError

from .config import FusionConfig

logger = logging.getLogger(__name__)

STATE_DIM = 10
POSITION = slice(0, 3)
VELOCITY = slice(3, 6)
BOX = slice(6, 10)
YAW = 9
NOMINAL_DT = 0.1
MIN_EIGENVALUE = 1e-12

# Measured sub-state of a 3D box detection: position, dims, yaw
BOX_MEASUREMENT = np.zeros((7, STATE_DIM))
BOX_MEASUREMENT[0:3, 0:3] = np.eye(3)
BOX_MEASUREMENT[3:7, 6:10] = np.eye(4)

TENTATIVE = 'tentative'
CONFIRMED = 'confirmed'
DELETED = 'deleted'


@dataclass
class Track:
    id: int
    x: np.ndarray
    P: np.ndarray
    status: str = TENTATIVE
    hits_lidar: int = 0
    hits_camera: int = 0
    age: int = 0
    frames_since_update: int = 0
    asymmetry_window: deque = field(default_factory=deque)
    source: str = 'lidar'
    kind: str = 'car'

    @property
    def position(self) -> np.ndarray:
        return self.x[POSITION]

    @property
    def velocity(self) -> np.ndarray:
        return self.x[VELOCITY]

    @property
    def box(self) -> OrientedBox:
        l, w, h, yaw = self.x[BOX]
        return OrientedBox(tuple(self.position), (max(l, 1e-3), max(w, 1e-3), max(h, 1e-3)), yaw)

    @property
    def hits(self) -> int:
        return self.hits_lidar + self.hits_camera

    @property
    def is_confirmed(self) -> bool:
        return self.status == CONFIRMED

    def copy(self) -> 'Track':
        return replace(self, x=self.x.copy(), P=self.P.copy(), asymmetry_window=deque(self.asymmetry_window, maxlen=self.asymmetry_window.maxlen))


def new_track(track_id: int, box: OrientedBox, position_cov, cfg: FusionConfig, box_std, yaw_std, source='lidar', kind='car') -> Track:
    x = np.zeros(STATE_DIM)
    x[POSITION] = box.center
    x[BOX] = (*box.dims, box.yaw)
    P = np.zeros((STATE_DIM, STATE_DIM))
    P[POSITION, POSITION] = position_cov
    P[VELOCITY, VELOCITY] = np.eye(3) * cfg.initial_velocity_std ** 2
    P[6:9, 6:9] = np.eye(3) * box_std ** 2
    P[YAW, YAW] = yaw_std ** 2
    return Track(id=track_id, x=x, P=P, source=source, kind=kind,
                 asymmetry_window=deque(maxlen=cfg.asymmetry_window_len))


def transition_matrix(dt: float) -> np.ndarray:
    F = np.eye(STATE_DIM)
    F[POSITION, VELOCITY] = np.eye(3) * dt
    return F


def process_noise(dt: float, cfg: FusionConfig) -> np.ndarray:
    """Diagonal Q, specified per 10 Hz frame and scaled with dt."""
    scale = dt / NOMINAL_DT
    diag = np.concatenate([
        np.full(3, cfg.q_position ** 2),
        np.full(3, cfg.q_velocity ** 2),
        np.full(4, cfg.q_box ** 2),
    ])
    return np.diag(diag * scale)


def kf_predict(track: Track, dt: float, cfg: FusionConfig) -> Track:
    if dt <= 0:
        raise ValueError(f"Prediction step needs dt > 0, got {dt}")
    F = transition_matrix(dt)
    predicted = track.copy()
    predicted.x = F @ track.x
    predicted.P = F @ track.P @ F.T + process_noise(dt, cfg)
    return predicted


def check_pd(matrix: np.ndarray, name: str):
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise ConfigError(f"{name} is not positive definite") from e


def kalman_correct(x, P, innovation, H, R):
    """
    Kalman correction in Joseph form.

    Returns:
        tuple: (posterior state, symmetrized posterior covariance)
    """
    R = np.atleast_2d(R)
    check_pd(R, "Measurement covariance")
    H = np.atleast_2d(H)
    S = H @ P @ H.T + R
    K = np.linalg.solve(S.T, (P @ H.T).T).T
    x_post = x + K @ np.atleast_1d(innovation)
    I_KH = np.eye(len(x)) - K @ H
    P_post = I_KH @ P @ I_KH.T + K @ R @ K.T
    P_post = 0.5 * (P_post + P_post.T)
    smallest = np.linalg.eigvalsh(P_post).min()
    if smallest <= MIN_EIGENVALUE:
        logger.warning(f"Posterior covariance lost definiteness (min eigenvalue {smallest:.3e}); regularizing")
        P_post = P_post + np.eye(len(x)) * (MIN_EIGENVALUE - smallest + MIN_EIGENVALUE)
    return x_post, P_post


def box_innovation(x, box: OrientedBox) -> np.ndarray:
    """z - Hx for a box measurement; yaw taken modulo pi (box heading is symmetric)."""
    z = np.array([*box.center, *box.dims, box.yaw])
    innovation = z - BOX_MEASUREMENT @ x
    dyaw = wrap_pi(innovation[6])
    if abs(dyaw) > np.pi / 2:
        dyaw = wrap_pi(dyaw - np.pi)
    innovation[6] = dyaw
    return innovation


def kf_update(track: Track, box: OrientedBox, R) -> Track:
    """Correct a track with a 3D box measurement in the world frame."""
    updated = track.copy()
    x, P = kalman_correct(track.x, track.P, box_innovation(track.x, box), BOX_MEASUREMENT, R)
    x[YAW] = wrap_pi(x[YAW])
    updated.x, updated.P = x, P
    return updated


def lidar_noise(cfg: FusionConfig) -> np.ndarray:
    return np.diag([cfg.r_lidar_position ** 2] * 3 + [cfg.r_lidar_box ** 2] * 3 + [cfg.r_lidar_yaw ** 2])


def camera3d_noise(position_cov, cfg: FusionConfig) -> np.ndarray:
    R = np.zeros((7, 7))
    R[0:3, 0:3] = position_cov
    R[3:6, 3:6] = np.eye(3) * cfg.r_camera_box ** 2
    R[6, 6] = cfg.r_camera_yaw ** 2
    return R


def kf_update_camera2d(track: Track, pixel_center, view, cfg: FusionConfig, step=1e-4) -> Optional[Track]:
    """
    Extended Kalman correction with a projected-center pixel measurement.

    The Jacobian of the projection is taken numerically with respect to the
    position states. Returns None when the track is not in front of the camera.
    """
    position = track.position
    predicted, depth = view.project_world(position)
    if depth <= view.camera.NEAR_PLANE:
        return None
    H = np.zeros((2, STATE_DIM))
    for axis in range(3):
        delta = np.zeros(3)
        delta[axis] = step
        plus, _ = view.project_world(position + delta)
        minus, _ = view.project_world(position - delta)
        H[:, axis] = (plus - minus) / (2 * step)
    innovation = np.asarray(pixel_center, dtype=float) - predicted
    R = np.eye(2) * cfg.r_camera_px ** 2
    updated = track.copy()
    x, P = kalman_correct(track.x, track.P, innovation, H, R)
    x[YAW] = wrap_pi(x[YAW])
    updated.x, updated.P = x, P
    return updated


def covariance_intersection(x1, P1, x2, P2, w: float):
    """
    Fuse two estimates with unknown cross-correlation.

    P_f^-1 = w P1^-1 + (1 - w) P2^-1
    x_f = P_f (w P1^-1 x1 + (1 - w) P2^-1 x2)

    Raises:
        ConfigError: w outside [0, 1]
    """
    if not 0.0 <= w <= 1.0:
        raise ConfigError(f"Covariance intersection weight must be in [0, 1], got {w}")
    info1 = np.linalg.inv(P1)
    info2 = np.linalg.inv(P2)
    P_f = np.linalg.inv(w * info1 + (1.0 - w) * info2)
    P_f = 0.5 * (P_f + P_f.T)
    x_f = P_f @ (w * info1 @ x1 + (1.0 - w) * info2 @ x2)
    return x_f, P_f
