"""
Piecewise constant-speed / constant-turn-rate trajectories.

Each segment is integrated in closed form so positions and velocities are
exact at any time; the last segment extends indefinitely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from sensors.geometry import Pose
from utils.exceptions import ConfigError

STRAIGHT_EPS = 1e-9


@dataclass(frozen=True)
class Segment:
    duration: float
    speed: float
    yaw_rate: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise ConfigError(f"Segment duration must be >= 0, got {self.duration}")


def _advance(x, y, yaw, speed, yaw_rate, dt):
    if abs(yaw_rate) < STRAIGHT_EPS:
        return x + speed * dt * math.cos(yaw), y + speed * dt * math.sin(yaw), yaw
    new_yaw = yaw + yaw_rate * dt
    radius = speed / yaw_rate
    return (x + radius * (math.sin(new_yaw) - math.sin(yaw)),
            y + radius * (math.cos(yaw) - math.cos(new_yaw)),
            new_yaw)


@dataclass(frozen=True)
class Trajectory:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        segments = tuple(s if isinstance(s, Segment) else Segment(**s) for s in self.segments)
        object.__setattr__(self, 'segments', segments or (Segment(duration=0.0, speed=0.0),))

    @classmethod
    def straight(cls, x, y, speed, yaw=0.0):
        return cls(x=x, y=y, yaw=yaw, segments=(Segment(duration=0.0, speed=speed),))

    @classmethod
    def stationary(cls, x, y, yaw=0.0):
        return cls.straight(x, y, 0.0, yaw)

    def _locate(self, t):
        """State at the start of the segment containing t, and time into it."""
        x, y, yaw = self.x, self.y, self.yaw
        elapsed = 0.0
        for segment in self.segments[:-1]:
            if t < elapsed + segment.duration:
                return x, y, yaw, segment, t - elapsed
            x, y, yaw = _advance(x, y, yaw, segment.speed, segment.yaw_rate, segment.duration)
            elapsed += segment.duration
        return x, y, yaw, self.segments[-1], t - elapsed

    def pose_at(self, t: float) -> Pose:
        x, y, yaw, segment, dt = self._locate(t)
        x, y, yaw = _advance(x, y, yaw, segment.speed, segment.yaw_rate, dt)
        return Pose((x, y, 0.0), yaw)

    def velocity_at(self, t: float):
        """World-frame planar velocity (vx, vy)."""
        x, y, yaw, segment, dt = self._locate(t)
        heading = yaw + segment.yaw_rate * dt
        return segment.speed * math.cos(heading), segment.speed * math.sin(heading)

    def speed_at(self, t: float) -> float:
        return self._locate(t)[3].speed

    def to_dict(self):
        return {
            'x': self.x, 'y': self.y, 'yaw': self.yaw,
            'segments': [{'duration': s.duration, 'speed': s.speed, 'yaw_rate': s.yaw_rate} for s in self.segments],
        }
