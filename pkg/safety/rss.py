"""
Longitudinal Responsibility-Sensitive Safety checks.

Each object is put into the ego's lane frame (x along the ego heading). Objects
ahead in the lane are checked with the same-direction rule; an object coming
head-on is checked with its closing speed against a stopped front. Objects
behind the ego or outside the lane margin are safe by construction.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from sensors.geometry import Pose
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

CONSISTENT = 'consistent'
FALSE_ALARM = 'false_alarm'
MISSED_DANGER = 'missed_danger'

SAFETY_FIELDS = ('frame', 'view', 'object_id', 'longitudinal_safe', 'd_actual', 'd_min')


@dataclass(frozen=True)
class RssParams:
    response_time: float = 1.0
    a_max_accel: float = 3.5
    b_min_brake: float = 4.0
    b_max_brake: float = 8.0
    lane_margin: float = 2.5
    ego_front: float = 2.25

    def __post_init__(self):
        for name in ('response_time', 'a_max_accel', 'b_min_brake', 'b_max_brake', 'lane_margin'):
            if getattr(self, name) <= 0:
                raise ConfigError(f"RssParams.{name} must be positive")
        if self.b_min_brake > self.b_max_brake:
            raise ConfigError(f"b_min_brake ({self.b_min_brake}) exceeds b_max_brake ({self.b_max_brake})")
        if self.ego_front < 0:
            raise ConfigError("RssParams.ego_front must be >= 0")

    @classmethod
    def from_config(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid rss section: {e}") from e


@dataclass(frozen=True)
class SafetyObject:
    """What the safety check needs of a track or a ground-truth object (world frame)."""

    id: int
    position: tuple
    velocity: tuple
    length: float = 4.0

    @classmethod
    def from_track(cls, track):
        return cls(id=track.id, position=tuple(track.position[:2]), velocity=tuple(track.velocity[:2]),
                   length=float(track.box.length))

    @classmethod
    def from_truth(cls, truth):
        return cls(id=truth.id, position=tuple(truth.box.center[:2]), velocity=tuple(truth.velocity),
                   length=float(truth.box.length))


@dataclass(frozen=True)
class SafetyPair:
    object_id: int
    longitudinal_safe: bool
    d_actual: float
    d_min: float


@dataclass(frozen=True)
class SafetyVerdict:
    frame: int
    pairs: tuple = field(default_factory=tuple)

    @property
    def unsafe_count(self) -> int:
        return sum(1 for p in self.pairs if not p.longitudinal_safe)

    def rows(self, view: str):
        return [[self.frame, view, p.object_id, p.longitudinal_safe, p.d_actual, p.d_min] for p in self.pairs]


def rss_min_distance(rear_v: float, front_v: float, p: RssParams = RssParams()) -> float:
    rho = p.response_time
    d_min = (rear_v * rho + 0.5 * p.a_max_accel * rho ** 2
             + (rear_v + rho * p.a_max_accel) ** 2 / (2.0 * p.b_min_brake)
             - front_v ** 2 / (2.0 * p.b_max_brake))
    return max(0.0, d_min)


def rss_longitudinal_safe(rear_v: float, front_v: float, d: float, p: RssParams = RssParams()):
    """
    Same-direction longitudinal rule.

    Args:
        rear_v: Speed of the rear (following) vehicle along the lane
        front_v: Speed of the front vehicle along the lane
        d: Current bumper-to-bumper gap
        p: RSS parameters

    Returns:
        tuple: (safe, d_min) with safe iff d > d_min
    """
    d_min = rss_min_distance(max(rear_v, 0.0), max(front_v, 0.0), p)
    return d > d_min, d_min


def pair_verdict(obj: SafetyObject, ego: Pose, ego_velocity, p: RssParams = RssParams()) -> SafetyPair:
    heading = np.array([math.cos(ego.yaw), math.sin(ego.yaw)])
    normal = np.array([-heading[1], heading[0]])
    rel = np.asarray(obj.position[:2], dtype=float) - np.asarray(ego.position[:2], dtype=float)
    x_rel, y_rel = float(rel @ heading), float(rel @ normal)
    gap = x_rel - obj.length / 2.0 - p.ego_front

    if x_rel <= 0.0 or abs(y_rel) > p.lane_margin:
        return SafetyPair(obj.id, True, gap, 0.0)

    ego_v = max(float(np.asarray(ego_velocity, dtype=float) @ heading), 0.0)
    obj_v = float(np.asarray(obj.velocity, dtype=float) @ heading)
    if obj_v >= 0.0:
        safe, d_min = rss_longitudinal_safe(ego_v, obj_v, max(gap, 0.0), p)
    else:
        # Head-on: the closing speed against a front that is already stopped
        safe, d_min = rss_longitudinal_safe(ego_v - obj_v, 0.0, max(gap, 0.0), p)
    return SafetyPair(obj.id, bool(safe), gap, d_min)


def evaluate_frame(frame: int, ego: Pose, ego_velocity, objects, p: RssParams = RssParams()) -> SafetyVerdict:
    """
    Pairwise (ego, object) verdicts for one frame.

    Args:
        frame: Frame index
        ego: Ego pose in the world frame
        ego_velocity: Ego (vx, vy) in the world frame
        objects: SafetyObject instances, or anything SafetyObject.from_track accepts
        p: RSS parameters

    Returns:
        SafetyVerdict: one pair per object
    """
    pairs = []
    for obj in objects:
        if not isinstance(obj, SafetyObject):
            obj = SafetyObject.from_track(obj)
        pairs.append(pair_verdict(obj, ego, ego_velocity, p))
    verdict = SafetyVerdict(frame=frame, pairs=tuple(pairs))
    if verdict.unsafe_count:
        logger.debug(f"Frame {frame}: {verdict.unsafe_count} unsafe of {len(pairs)} objects")
    return verdict


def evaluate_truth(frame: int, ego: Pose, ego_velocity, truth, p: RssParams = RssParams()) -> SafetyVerdict:
    return evaluate_frame(frame, ego, ego_velocity, [SafetyObject.from_truth(t) for t in truth], p)


def perceived_vs_true(perceived: SafetyVerdict, truth: SafetyVerdict) -> str:
    if perceived.unsafe_count > 0 and truth.unsafe_count == 0:
        return FALSE_ALARM
    if perceived.unsafe_count == 0 and truth.unsafe_count > 0:
        return MISSED_DANGER
    return CONSISTENT
