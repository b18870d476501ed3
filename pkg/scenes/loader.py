"""
Scene description files.

A scene file is JSON:

    {
      "name": "lead_0", "seed": 0, "frame_rate": 10.0, "frame_count": 100,
      "range_noise": 0.02,
      "sensor": {"channels": 32, "elevation_min_deg": -30.67, ...}
                or {"elevation_angles": [...], "firing_interval": ..., ...},
      "camera": {"focal_length": 800.0, "horizontal_fov_deg": 90.0, ...},
      "ego": {"x": 0, "y": 0, "yaw": 0, "segments": [{"duration": 0, "speed": 6}]},
      "objects": [{"id": 1, "kind": "car", "dims": [4, 2, 1.5], "trajectory": {...}}]
    }

Missing optional keys take the Scene defaults.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict
from pathlib import Path

from sensors.camera import CameraModel
from sensors.geometry import SensorModel
from utils.exceptions import ConfigError

from .scene import Scene, SceneObject
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

SCENE_KEYS = {'name', 'seed', 'frame_rate', 'frame_count', 'range_noise', 'object_intensity',
              'ground_intensity', 'sensor', 'camera', 'ego', 'objects'}


def sensor_from_dict(data) -> SensorModel:
    data = dict(data)
    if 'elevation_angles' in data:
        try:
            return SensorModel(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid sensor section: {e}") from e
    return SensorModel.from_config(data)


def camera_from_dict(data) -> CameraModel:
    data = dict(data)
    if 'horizontal_fov' in data:
        try:
            return CameraModel(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid camera section: {e}") from e
    return CameraModel.from_config(data)


def scene_from_dict(data) -> Scene:
    unknown = set(data) - SCENE_KEYS
    if unknown:
        raise ConfigError(f"Unknown scene keys: {sorted(unknown)}")
    if 'name' not in data or 'ego' not in data:
        raise ConfigError("Scene needs 'name' and 'ego'")

    kwargs = {key: data[key] for key in ('seed', 'frame_rate', 'frame_count', 'range_noise',
                                         'object_intensity', 'ground_intensity') if key in data}
    if 'sensor' in data:
        kwargs['sensor'] = sensor_from_dict(data['sensor'])
    if 'camera' in data:
        kwargs['camera'] = camera_from_dict(data['camera'])

    try:
        objects = tuple(
            SceneObject(
                id=int(obj['id']),
                kind=obj.get('kind', 'car'),
                dims=tuple(obj.get('dims', (4.0, 2.0, 1.5))),
                trajectory=Trajectory(**obj['trajectory']),
            )
            for obj in data.get('objects', [])
        )
        ego = Trajectory(**data['ego'])
    except (KeyError, TypeError) as e:
        raise ConfigError(f"Invalid scene '{data['name']}': {e}") from e

    return Scene(name=data['name'], ego=ego, objects=objects, **kwargs)


def scene_to_dict(scene: Scene):
    sensor = asdict(scene.sensor)
    sensor['elevation_angles'] = list(sensor['elevation_angles'])
    camera = asdict(scene.camera)
    camera['image_size'] = list(camera['image_size'])
    camera['mount_position'] = list(camera['mount_position'])
    return {
        'name': scene.name,
        'seed': scene.seed,
        'frame_rate': scene.frame_rate,
        'frame_count': scene.frame_count,
        'range_noise': scene.range_noise,
        'object_intensity': scene.object_intensity,
        'ground_intensity': scene.ground_intensity,
        'sensor': sensor,
        'camera': camera,
        'ego': scene.ego.to_dict(),
        'objects': [
            {'id': obj.id, 'kind': obj.kind, 'dims': list(obj.dims), 'trajectory': obj.trajectory.to_dict()}
            for obj in scene.objects
        ],
    }


def load_scene(path) -> Scene:
    """
    Read a scene file.

    Raises:
        ConfigError: when the file is missing or malformed
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Scene file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Scene file {path} is not valid JSON: {e}") from e
    scene = scene_from_dict(data)
    logger.debug(f"Loaded scene '{scene.name}' from {path}")
    return scene


def dump_scene(scene: Scene, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + '\n')
    return path


def resolve_scene(ref, **suite_kwargs) -> Scene:
    """
    A scene file path, or the name of a builtin scene.

    Raises:
        ConfigError: neither an existing file nor a builtin name
    """
    path = Path(ref)
    if path.suffix == '.json' or path.exists():
        return load_scene(path)
    from .suite import builtin_scene
    try:
        return builtin_scene(str(ref), **suite_kwargs)
    except KeyError:
        raise ConfigError(f"Scene '{ref}' is neither a scene file nor a builtin scene name") from None
