"""
One (scene, AV design, attack) condition, frame by frame:

    render -> attacker -> receiver integrity -> victim perception -> victim
    tracker -> safety (perceived and true) -> metrics

Camera noise is seeded from (plan seed, scene seed, frame), never from the
attack, so every condition of a scene sees the same camera detections.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from attacks.engine import Attacker
from evaluation.metrics import FRAME_FIELDS, FrameMetrics, frame_metrics
from perception.camera import detect_camera_2d, detect_camera_mono3d
from perception.lidar import detect_lidar
from safety.rss import FALSE_ALARM, SAFETY_FIELDS, evaluate_frame, evaluate_truth, perceived_vs_true
from scenes.render import render_camera_truth, render_sweep
from sensors.camera import CameraView
from sensors.integrity import IntegrityConfig, IntegrityMonitor
from tracking.kalman import STATE_DIM
from tracking.trackers import FrameInputs, build_tracker, detection_to_world
from utils.csv_utils import read_rows, write_rows

logger = logging.getLogger(__name__)

CAMERA_2D_STREAM = 1
CAMERA_3D_STREAM = 2

TRACK_FIELDS = ('frame', 'track_id') + tuple(f'x{i}' for i in range(STATE_DIM)) + ('status', 'source')
RUN_INTEGRITY_FIELDS = ('frame', 'points', 'zeta_alpha', 'zeta_beta', 'zeta_gamma', 'zeta_rho', 'zeta', 'dropped')
SAFETY_CLASS_FIELDS = ('frame', 'perceived_unsafe', 'true_unsafe', 'classification')


def condition_dir(root, scene_name: str, av: int, attack: str) -> Path:
    return Path(root) / scene_name / f'av{av}' / attack


def camera_rng(seed: int, scene_seed: int, frame_k: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, scene_seed, frame_k, stream])


def attack_location(decision):
    """Sensor-frame (x, y) the attacker aimed at this frame, if it aimed anywhere."""
    if decision is None or decision.range is None or decision.theta is None:
        return None
    return (decision.range * math.cos(decision.theta), decision.range * math.sin(decision.theta))


@dataclass
class ConditionResult:
    scene: str
    av: int
    attack: str
    frames: list = field(default_factory=list)
    track_rows: list = field(default_factory=list)
    safety_rows: list = field(default_factory=list)
    safety_classes: list = field(default_factory=list)
    integrity_rows: list = field(default_factory=list)
    attacker: Attacker = None

    @property
    def integrity_failures(self) -> int:
        return sum(1 for row in self.integrity_rows if not row[6])

    def write(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        write_rows(out_dir / 'metrics.csv', FRAME_FIELDS, [m.as_row() for m in self.frames])
        write_rows(out_dir / 'tracks.csv', TRACK_FIELDS, self.track_rows)
        write_rows(out_dir / 'safety.csv', SAFETY_FIELDS, self.safety_rows)
        write_rows(out_dir / 'safety_classes.csv', SAFETY_CLASS_FIELDS, self.safety_classes)
        write_rows(out_dir / 'integrity.csv', RUN_INTEGRITY_FIELDS, self.integrity_rows)
        if self.attacker is not None:
            self.attacker.write_log(out_dir / 'attacker.csv')
        return out_dir / 'metrics.csv'


def integrity_for(sensor, lab) -> IntegrityConfig:
    """Receiver thresholds derived for the scene's own sensor."""
    section = lab.raw.get('integrity')
    return IntegrityConfig.for_sensor(sensor, **section) if section else lab.integrity


def run_condition(scene, av: int, attack: str, lab, seed: int = 0, frames=None) -> ConditionResult:
    """
    Run one condition through the whole pipeline.

    Args:
        scene: Scene to render
        av: Victim design 1..4
        attack: Attack name; 'baseline' forwards sweeps unmodified
        lab: LabConfig
        seed: Plan seed for camera noise
        frames: Optional cap on the number of frames

    Returns:
        ConditionResult
    """
    count = scene.frame_count if frames is None else min(frames, scene.frame_count)
    sensor = scene.sensor
    integrity_cfg = integrity_for(sensor, lab)
    attacker = Attacker(attack, sensor, lab.attack, lab.attacker_lidar)
    monitor = IntegrityMonitor(sensor, integrity_cfg)
    tracker = build_tracker(av, lab.fusion, lidar_max_range=sensor.max_range)
    result = ConditionResult(scene=scene.name, av=av, attack=attack, attacker=attacker)

    for k in range(count):
        clean, truth_boxes = render_sweep(scene, k)
        sweep = attacker.attack_step(clean)

        verdict = monitor.check(sweep)
        dropped = integrity_cfg.drop_failed and not verdict.zeta
        result.integrity_rows.append([k, len(sweep), verdict.zeta_alpha, verdict.zeta_beta, verdict.zeta_gamma,
                                      verdict.zeta_rho, verdict.zeta, dropped])

        pose = scene.sensor_pose(k)
        detections = [] if dropped else detect_lidar(sweep, sensor.mount_height, lab.lidar)
        camera2d = detect_camera_2d(render_camera_truth(scene, k), scene.camera, lab.camera_noise,
                                    camera_rng(seed, scene.seed, k, CAMERA_2D_STREAM))
        camera3d = detect_camera_mono3d(truth_boxes, scene.camera, lab.camera_noise,
                                        camera_rng(seed, scene.seed, k, CAMERA_3D_STREAM))
        tracker.step_frame(FrameInputs(
            dt=scene.frame_interval,
            lidar=[detection_to_world(d, pose) for d in detections],
            camera2d=camera2d,
            camera3d=[detection_to_world(d, pose) for d in camera3d],
            view=CameraView(scene.camera, pose),
        ))
        tracks = tracker.output()

        ego, ego_velocity, truth = scene.ego_pose(k), scene.ego_velocity(k), scene.truth_at(k)
        perceived = evaluate_frame(k, ego, ego_velocity, tracks, lab.rss)
        actual = evaluate_truth(k, ego, ego_velocity, truth, lab.rss)
        classification = perceived_vs_true(perceived, actual)

        decision = attacker.decisions[-1] if attacker.decisions else None
        result.frames.append(frame_metrics(
            k, detections, tracks, truth, pose,
            unsafe_count=perceived.unsafe_count,
            false_alarm=classification == FALSE_ALARM,
            cfg=lab.metrics,
            attack_location=attack_location(decision),
        ))
        result.safety_rows += perceived.rows('perceived') + actual.rows('true')
        result.safety_classes.append([k, perceived.unsafe_count, actual.unsafe_count, classification])
        result.track_rows += [[k, track.id, *(float(v) for v in track.x), track.status, source]
                              for track, source in tracker.dump()]

    logger.info(f"{scene.name} av{av} {attack}: {count} frames, {sum(m.ft for m in result.frames)} false tracks, "
                f"{result.integrity_failures} integrity failures")
    return result


def read_frame_metrics(path) -> list:
    return [FrameMetrics.from_row(row) for row in read_rows(path)]
