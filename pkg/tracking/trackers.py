"""
The four victim designs.

    AV.1  LiDAR detection and tracking
    AV.2  central tracker fusing LiDAR boxes and camera 2D boxes
    AV.3  AV.2 plus a camera/LiDAR data-asymmetry monitor
    AV.4  independent LiDAR and monocular-3D trackers fused track-to-track
          with covariance intersection

Detections are handed in already expressed in the world frame, except camera
2D boxes, which stay in pixels and are compared against projected tracks.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.stats import chi2

from perception.detections import BoxDetection
from sensors.camera import CameraView
from sensors.geometry import Pose, wrap_pi

from .association import associate, bev_distance_matrix
from .config import FusionConfig
from .kalman import (
    CONFIRMED, DELETED, STATE_DIM, YAW, Track, camera3d_noise, covariance_intersection, kf_predict,
    kf_update, kf_update_camera2d, lidar_noise, new_track,
)

logger = logging.getLogger(__name__)

CAMERA_ID_OFFSET = 1_000_000


def detection_to_world(det: BoxDetection, pose: Pose) -> BoxDetection:
    """Sensor-frame detection expressed in the world frame of pose."""
    if det.box is None:
        return det
    covariance = det.covariance
    if covariance is not None:
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        rotation = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        covariance = rotation @ covariance @ rotation.T
    return replace(det, box=det.box.transformed(pose), covariance=covariance)


@dataclass
class FrameInputs:
    dt: float
    lidar: list = field(default_factory=list)
    camera2d: list = field(default_factory=list)
    camera3d: list = field(default_factory=list)
    view: Optional[CameraView] = None


class TrackManager:
    """
    Single-source box tracker (AV.1 and each AV.4 pipeline).

    Per frame: predict, associate on BEV distance, update, spawn tentative
    tracks, confirm on hits, delete after consecutive misses.
    """

    name = 'av1'

    def __init__(self, cfg: FusionConfig, gate=None, source='lidar', id_offset=0):
        self.cfg = cfg
        self.gate = cfg.association_gate if gate is None else gate
        self.source = source
        self.tracks = []
        self.next_id = id_offset + 1
        self.frame = -1

    def measurement_noise(self, det: BoxDetection) -> np.ndarray:
        if det.source == 'camera3d':
            return camera3d_noise(det.covariance, self.cfg)
        return lidar_noise(self.cfg)

    def spawn(self, det: BoxDetection) -> Track:
        R = self.measurement_noise(det)
        box_std = self.cfg.r_camera_box if det.source == 'camera3d' else self.cfg.r_lidar_box
        yaw_std = self.cfg.r_camera_yaw if det.source == 'camera3d' else self.cfg.r_lidar_yaw
        track = new_track(self.next_id, det.box, R[0:3, 0:3], self.cfg, box_std, yaw_std,
                          source=self.source, kind=det.kind)
        self.next_id += 1
        return track

    def predict(self, dt):
        self.frame += 1
        if dt > 0:
            self.tracks = [kf_predict(track, dt, self.cfg) for track in self.tracks]
        for track in self.tracks:
            track.age += 1

    def update_boxes(self, detections):
        """Associate 3D detections, update matches, spawn the rest. Returns ids updated this frame."""
        updated = set()
        if self.tracks and detections:
            cost = bev_distance_matrix([t.position[:2] for t in self.tracks], [d.box.center[:2] for d in detections])
            assignment = associate(cost, self.gate)
            unmatched = assignment.unmatched_cols
            for row, col in assignment.pairs:
                det = detections[col]
                track = kf_update(self.tracks[row], det.box, self.measurement_noise(det))
                track.hits_lidar += 1
                track.frames_since_update = 0
                self.tracks[row] = track
                updated.add(track.id)
        else:
            unmatched = tuple(range(len(detections)))
        for col in unmatched:
            track = self.spawn(detections[col])
            track.hits_lidar = 1
            self.tracks.append(track)
            updated.add(track.id)
        return updated

    def finish(self, updated):
        survivors = []
        for track in self.tracks:
            if track.id not in updated:
                track.frames_since_update += 1
            if track.status != CONFIRMED and track.hits >= self.cfg.confirm_hits:
                track.status = CONFIRMED
            if track.frames_since_update >= self.cfg.delete_misses:
                track.status = DELETED
                logger.debug(f"{self.name}: track {track.id} deleted after {track.frames_since_update} misses")
                continue
            survivors.append(track)
        self.tracks = survivors

    def step(self, detections, dt):
        self.predict(dt)
        updated = self.update_boxes(list(detections))
        self.finish(updated)
        return self.output()

    def step_frame(self, inputs: FrameInputs):
        return self.step(inputs.lidar, inputs.dt)

    def output(self):
        return [track for track in self.tracks if track.is_confirmed]

    def dump(self):
        return [(track, self.source) for track in self.tracks]


class CentralFusionTracker(TrackManager):
    """AV.2: camera 2D boxes update and confirm LiDAR-spawned tracks but never spawn."""

    name = 'av2'

    def camera_cost(self, detections, view: CameraView) -> np.ndarray:
        cost = np.full((len(self.tracks), len(detections)), np.inf)
        centers = np.array([d.center_2d for d in detections]).reshape(-1, 2)
        for row, track in enumerate(self.tracks):
            uv, depth = view.project_world(track.position)
            if depth <= view.camera.NEAR_PLANE or not view.covers_world(track.position)[0]:
                continue
            cost[row] = np.linalg.norm(centers - uv, axis=1)
        return cost

    def update_camera(self, detections, view: Optional[CameraView]):
        """Returns ids of tracks matched by a camera box this frame."""
        matched = set()
        if view is None or not self.tracks or not detections:
            return matched
        assignment = associate(self.camera_cost(detections, view), self.cfg.association_gate_px)
        for row, col in assignment.pairs:
            track = kf_update_camera2d(self.tracks[row], detections[col].center_2d, view, self.cfg)
            if track is None:
                continue
            track.hits_camera += 1
            track.frames_since_update = 0
            self.tracks[row] = track
            matched.add(track.id)
        return matched

    def step(self, lidar_dets, camera2d_dets, dt, view=None):
        self.predict(dt)
        updated = self.update_boxes(list(lidar_dets))
        camera_matched = self.update_camera(list(camera2d_dets), view)
        self.finish(updated | camera_matched)
        self.monitor(camera_matched, view)
        return self.output()

    def monitor(self, camera_matched, view):
        """Post-update hook over the surviving tracks; AV.2 keeps every track."""

    def step_frame(self, inputs: FrameInputs):
        return self.step(inputs.lidar, inputs.camera2d, inputs.dt, inputs.view)


class AsymmetryMonitorTracker(CentralFusionTracker):
    """
    AV.3: delete confirmed tracks the camera persistently fails to corroborate inside its view.

    Every track inside the view records one camera-matched flag per frame from
    the frame it was spawned, so a LiDAR-only object is dropped on the frame
    its window fills.
    """

    name = 'av3'

    def monitor(self, camera_matched, view):
        if view is None:
            return
        survivors = []
        for track in self.tracks:
            if view.covers_world(track.position)[0]:
                track.asymmetry_window.append(track.id in camera_matched)
                window = track.asymmetry_window
                if track.is_confirmed and len(window) == window.maxlen:
                    ratio = sum(window) / len(window)
                    if ratio < self.cfg.asymmetry_min_camera_ratio:
                        track.status = DELETED
                        logger.info(f"av3: track {track.id} deleted by asymmetry monitor "
                                    f"(camera ratio {ratio:.2f} over {len(window)} frames)")
                        continue
            survivors.append(track)
        self.tracks = survivors


def _align_yaw(reference: Track, other: Track) -> Track:
    if abs(wrap_pi(other.x[YAW] - reference.x[YAW])) > math.pi / 2:
        other = other.copy()
        other.x[YAW] = wrap_pi(other.x[YAW] + math.pi)
    return other


def line_of_sight_residual(lidar: Track, camera: Track, origin):
    """
    Range and range-rate difference of two tracks along the LiDAR track's
    line of sight from origin, with the covariance of that difference.

    Returns:
        tuple: (2-vector residual, 2x2 covariance)
    """
    offset = lidar.position[:2] - np.asarray(origin, dtype=float)
    distance = float(np.hypot(*offset))
    direction = offset / distance if distance > 0 else np.array([1.0, 0.0])
    J = np.zeros((2, STATE_DIM))
    J[0, 0:2] = direction
    J[1, 3:5] = direction
    return J @ (lidar.x - camera.x), J @ (lidar.P + camera.P) @ J.T


def range_consistent(lidar: Track, camera: Track, origin, threshold: float) -> bool:
    residual, covariance = line_of_sight_residual(lidar, camera, origin)
    return float(residual @ np.linalg.solve(covariance, residual)) <= threshold


def fuse_tracks(lidar_tracks, camera_tracks, cfg: FusionConfig, view=None, lidar_max_range=math.inf):
    """
    Track-to-track fusion.

    Pairs within t2t_gate are only associated when their line-of-sight range
    and range rate pass the chi-square consistency gate; a LiDAR track pulled
    along the ray away from the camera's estimate is left unmatched.

    Returns:
        tuple: (fused tracks, suppressed tracks)
    """
    lidar_tracks = [t for t in lidar_tracks if t.is_confirmed]
    camera_tracks = [t for t in camera_tracks if t.is_confirmed]
    fused, suppressed = [], []
    origin = view.sensor_pose.position[:2] if view is not None else (0.0, 0.0)

    if lidar_tracks and camera_tracks:
        cost = bev_distance_matrix([t.position[:2] for t in lidar_tracks], [t.position[:2] for t in camera_tracks])
        threshold = chi2.ppf(cfg.t2t_consistency_prob, df=2)
        for row, col in zip(*np.nonzero(cost <= cfg.t2t_gate)):
            if not range_consistent(lidar_tracks[row], camera_tracks[col], origin, threshold):
                cost[row, col] = np.inf
                logger.debug(f"av4: lidar track {lidar_tracks[row].id} and camera track {camera_tracks[col].id} "
                             f"disagree in range; not associated")
        assignment = associate(cost, cfg.t2t_gate)
    else:
        assignment = associate(np.zeros((len(lidar_tracks), len(camera_tracks))), cfg.t2t_gate)

    for row, col in assignment.pairs:
        lidar, camera = lidar_tracks[row], _align_yaw(lidar_tracks[row], camera_tracks[col])
        x, P = covariance_intersection(lidar.x, lidar.P, camera.x, camera.P, cfg.ci_weight)
        x[YAW] = wrap_pi(x[YAW])
        track = lidar.copy()
        track.x, track.P, track.source = x, P, 'fused'
        track.hits_camera = camera.hits
        fused.append(track)

    for row in assignment.unmatched_rows:
        track = lidar_tracks[row]
        if view is not None and view.covers_world(track.position)[0]:
            suppressed.append(track)
        else:
            fused.append(track)
    for col in assignment.unmatched_cols:
        track = camera_tracks[col]
        if math.hypot(track.position[0] - origin[0], track.position[1] - origin[1]) <= lidar_max_range:
            suppressed.append(track)
        else:
            fused.append(track)

    for track in suppressed:
        logger.info(f"av4: {track.source} track {track.id} at ({track.position[0]:.1f}, {track.position[1]:.1f}) "
                    f"has no counterpart in the other pipeline; recognized as false")
    return fused, suppressed


def fuse_t2t(lidar_tracks, camera_tracks, cfg: FusionConfig, view=None, lidar_max_range=math.inf):
    """Fused tracks of AV.4; single-pipeline tracks inside the shared view are dropped."""
    return fuse_tracks(lidar_tracks, camera_tracks, cfg, view, lidar_max_range)[0]


class T2TFusionTracker:
    """AV.4: LiDAR and monocular-3D pipelines tracked independently, then fused."""

    name = 'av4'

    def __init__(self, cfg: FusionConfig, lidar_max_range=math.inf):
        self.cfg = cfg
        self.lidar = TrackManager(cfg, source='lidar')
        self.camera = TrackManager(cfg, gate=cfg.camera3d_gate, source='camera3d', id_offset=CAMERA_ID_OFFSET)
        self.lidar_max_range = lidar_max_range
        self.fused = []
        self.suppressed = []

    def step(self, lidar_dets, camera3d_dets, dt, view=None):
        self.lidar.step(lidar_dets, dt)
        self.camera.step(camera3d_dets, dt)
        self.fused, self.suppressed = fuse_tracks(self.lidar.output(), self.camera.output(), self.cfg,
                                                  view, self.lidar_max_range)
        return self.fused

    def step_frame(self, inputs: FrameInputs):
        return self.step(inputs.lidar, inputs.camera3d, inputs.dt, inputs.view)

    def output(self):
        return self.fused

    def dump(self):
        rows = [(track, track.source) for track in self.fused]
        fused_ids = {track.id for track in self.fused}
        rows += [(track, track.source) for track in self.lidar.tracks + self.camera.tracks if track.id not in fused_ids]
        return rows


def step_av1(state: TrackManager, lidar_dets, dt):
    return state.step(lidar_dets, dt), state


def step_av2(state: CentralFusionTracker, lidar_dets, camera2d_dets, dt, view=None):
    return state.step(lidar_dets, camera2d_dets, dt, view), state


def step_av3(state: AsymmetryMonitorTracker, lidar_dets, camera2d_dets, dt, view=None):
    return state.step(lidar_dets, camera2d_dets, dt, view), state


TRACKERS = {
    1: TrackManager,
    2: CentralFusionTracker,
    3: AsymmetryMonitorTracker,
    4: T2TFusionTracker,
}


def build_tracker(av: int, cfg: FusionConfig, lidar_max_range=math.inf):
    if av not in TRACKERS:
        raise ValueError(f"Unknown AV design {av}; expected one of {sorted(TRACKERS)}")
    if av == 4:
        return T2TFusionTracker(cfg, lidar_max_range=lidar_max_range)
    return TRACKERS[av](cfg)
