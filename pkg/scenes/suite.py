"""
Builtin scene suite: longitudinal driving scenarios at desk scale.

The ego drives along +x at EGO_SPEED from the origin. Every scene is built so
the unattacked ground truth stays RSS-safe: lead vehicles brake and speed up
relative to the ego but never close inside the safe distance, and oncoming or
parked traffic sits outside the lane margin.
"""
from __future__ import annotations

import logging
import math

from .scene import CAR_DIMS, PEDESTRIAN_DIMS, Scene, SceneObject
from .trajectory import Segment, Trajectory

logger = logging.getLogger(__name__)

EGO_SPEED = 6.0
LANE_WIDTH = 3.5


def _car(obj_id, trajectory):
    return SceneObject(id=obj_id, kind='car', trajectory=trajectory, dims=CAR_DIMS)


def _pedestrian(obj_id, trajectory):
    return SceneObject(id=obj_id, kind='pedestrian', trajectory=trajectory, dims=PEDESTRIAN_DIMS)


def _lead(x, speed, obj_id=1):
    return _car(obj_id, Trajectory.straight(x, 0.0, speed))


def _speed_profile_lead(x, profile, obj_id=1):
    """A lead in the ego lane following (duration, speed) pairs, then holding the ego speed."""
    segments = tuple(Segment(duration=duration, speed=speed) for duration, speed in profile)
    segments += (Segment(duration=0.0, speed=EGO_SPEED),)
    return _car(obj_id, Trajectory(x=x, y=0.0, yaw=0.0, segments=segments))


def _oncoming(x, speed, obj_id):
    return _car(obj_id, Trajectory.straight(x, LANE_WIDTH, speed, yaw=math.pi))


def _crossing(x, y0, speed, obj_id):
    yaw = math.pi / 2 if speed >= 0 else -math.pi / 2
    return _car(obj_id, Trajectory.straight(x, y0, abs(speed), yaw=yaw))


def _lane_change(x, speed, start, obj_id=1, yaw_rate=0.2, turn=1.5, hold=0.5):
    """A car in the adjacent lane (+y) cutting into the ego lane after `start` seconds."""
    segments = (
        Segment(duration=start, speed=speed),
        Segment(duration=turn, speed=speed, yaw_rate=-yaw_rate),
        Segment(duration=hold, speed=speed),
        Segment(duration=turn, speed=speed, yaw_rate=yaw_rate),
        Segment(duration=0.0, speed=speed),
    )
    return _car(obj_id, Trajectory(x=x, y=LANE_WIDTH, yaw=0.0, segments=segments))


def _multi(lead_x, parked, pedestrian_x, oncoming_x):
    objects = [_lead(lead_x, EGO_SPEED + 0.5, obj_id=1)]
    for offset, (x, side) in enumerate(parked):
        objects.append(_car(10 + offset, Trajectory.stationary(x, side * 4.5)))
    objects.append(_pedestrian(20, Trajectory.stationary(pedestrian_x, 6.0)))
    objects.append(_oncoming(oncoming_x, 7.0, obj_id=30))
    return objects


def _scene_specs():
    specs = []
    leads = [
        (25.0, ((2.0, 5.0), (4.0, 7.0))),
        (27.0, ((3.0, 7.0), (5.0, 4.8))),
        (30.0, ((4.0, 7.0), (6.0, 4.5))),
        (33.0, ((7.0, 5.0),)),
        (29.0, ((2.0, 8.0), (3.0, 4.0))),
    ]
    for i, (x, profile) in enumerate(leads):
        specs.append((f'lead_{i}', [_speed_profile_lead(x, profile)]))
    for i, (lead_x, oncoming_x, speed) in enumerate([(26.0, 80.0, 8.0), (30.0, 100.0, 10.0), (28.0, 60.0, 6.0)]):
        specs.append((f'oncoming_{i}', [_lead(lead_x, EGO_SPEED), _oncoming(oncoming_x, speed, obj_id=2)]))
    for i, (x, y0, speed) in enumerate([(70.0, -30.0, 5.0), (75.0, 30.0, -5.0), (72.0, -40.0, 6.0)]):
        specs.append((f'crossing_{i}', [_crossing(x, y0, speed, obj_id=1), _lead(27.0, 6.5, obj_id=2)]))
    for i, (x, speed, start) in enumerate([(30.0, 6.5, 2.0), (35.0, 7.0, 3.0), (28.0, 7.5, 1.0)]):
        specs.append((f'lane_change_{i}', [_lane_change(x, speed, start)]))
    multi = [
        (27.0, [(40.0, 1), (55.0, -1), (70.0, 1)], 45.0, 90.0),
        (30.0, [(20.0, -1), (35.0, 1), (50.0, -1), (80.0, 1)], 60.0, 70.0),
        (26.0, [(45.0, 1), (46.0, -1), (65.0, 1)], 30.0, 110.0),
        (32.0, [(25.0, 1), (60.0, 1), (61.0, -1)], 50.0, 85.0),
    ]
    for i, args in enumerate(multi):
        specs.append((f'multi_object_{i}', _multi(*args)))
    specs.append(('empty_road_0', []))
    specs.append(('empty_road_1', []))
    return specs


def builtin_scene_suite(sensor=None, camera=None, frame_count=100, frame_rate=10.0, range_noise=0.02):
    """
    Deterministic scenes covering lead, oncoming, crossing, lane-change,
    multi-object and empty-road situations.

    Args:
        sensor: SensorModel for every scene (default desk-scale model)
        camera: CameraModel for every scene
        frame_count: Frames per scene
        frame_rate: Frames per second

    Returns:
        list: Scene instances, each with its own seed
    """
    extra = {}
    if sensor is not None:
        extra['sensor'] = sensor
    if camera is not None:
        extra['camera'] = camera
    ego = Trajectory.straight(0.0, 0.0, EGO_SPEED)
    scenes = [
        Scene(
            name=name,
            ego=ego,
            objects=tuple(objects),
            frame_rate=frame_rate,
            frame_count=frame_count,
            seed=seed,
            range_noise=range_noise,
            **extra,
        )
        for seed, (name, objects) in enumerate(_scene_specs())
    ]
    logger.debug(f"Built {len(scenes)} builtin scenes")
    return scenes


def builtin_scene(name, **kwargs):
    for scene in builtin_scene_suite(**kwargs):
        if scene.name == name:
            return scene
    raise KeyError(name)
