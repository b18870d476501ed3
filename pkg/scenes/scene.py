"""
Scene description: ego trajectory, objects and the sensors observing them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from sensors.camera import CameraModel
from sensors.geometry import OrientedBox, Pose, SensorModel, sensor_pose
from utils.exceptions import ConfigError

from .trajectory import Trajectory

CAR_DIMS = (4.0, 2.0, 1.5)
PEDESTRIAN_DIMS = (0.6, 0.6, 1.7)


@dataclass(frozen=True)
class SceneObject:
    """
    An object moving along a trajectory; its box sits on the ground plane.
    """

    id: int
    kind: str
    trajectory: Trajectory
    dims: tuple = CAR_DIMS

    KIND_CHOICES = ('car', 'pedestrian')

    def __post_init__(self):
        if self.kind not in self.KIND_CHOICES:
            raise ConfigError(f"Unknown object kind '{self.kind}'")
        object.__setattr__(self, 'dims', tuple(float(d) for d in self.dims))

    def box_at(self, t: float) -> OrientedBox:
        """World-frame box at time t."""
        pose = self.trajectory.pose_at(t)
        return OrientedBox((pose.position[0], pose.position[1], self.dims[2] / 2.0), self.dims, pose.yaw)

    @property
    def box(self) -> OrientedBox:
        return self.box_at(0.0)


@dataclass(frozen=True)
class TruthObject:
    id: int
    kind: str
    box: OrientedBox
    velocity: tuple
    box_sensor: OrientedBox


@dataclass(frozen=True)
class Scene:
    name: str
    ego: Trajectory
    objects: tuple = field(default_factory=tuple)
    sensor: SensorModel = field(default_factory=SensorModel.default)
    camera: CameraModel = field(default_factory=CameraModel)
    frame_rate: float = 10.0
    frame_count: int = 100
    seed: int = 0
    range_noise: float = 0.02
    object_intensity: float = 0.8
    ground_intensity: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, 'objects', tuple(self.objects))
        if self.frame_count < 1:
            raise ConfigError(f"Scene '{self.name}' needs frame_count >= 1")
        if self.frame_rate <= 0:
            raise ConfigError(f"Scene '{self.name}' needs a positive frame_rate")
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ConfigError(f"Scene '{self.name}' has duplicate object ids")

    @property
    def frame_interval(self) -> float:
        return 1.0 / self.frame_rate

    def time_of(self, frame_k: int) -> float:
        return frame_k / self.frame_rate

    def frame_start_us(self, frame_k: int) -> int:
        return int(round(self.time_of(frame_k) * 1e6))

    def ego_pose(self, frame_k: int) -> Pose:
        return self.ego.pose_at(self.time_of(frame_k))

    def ego_velocity(self, frame_k: int):
        return self.ego.velocity_at(self.time_of(frame_k))

    def sensor_pose(self, frame_k: int) -> Pose:
        return sensor_pose(self.ego_pose(frame_k), self.sensor)

    def truth_at(self, frame_k: int):
        """Ground truth for every object: world box, world velocity, sensor-frame box."""
        t = self.time_of(frame_k)
        pose = self.sensor_pose(frame_k)
        truth = []
        for obj in self.objects:
            box = obj.box_at(t)
            truth.append(TruthObject(
                id=obj.id,
                kind=obj.kind,
                box=box,
                velocity=obj.trajectory.velocity_at(t),
                box_sensor=box.relative_to(pose),
            ))
        return truth
