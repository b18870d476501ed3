"""
Layered lab configuration.

One JSON file (config/lab_defaults.json by default, LAB_CONFIG_FILE to point
elsewhere) holds a section per module. Plan overrides are deep-merged on top
and every section is turned into the dataclass its module consumes.
"""
from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings

from attacks.config import ATTACK_CHOICES, AttackConfig
from evaluation.metrics import MetricsConfig
from netproxy.stream import StreamConfig
from perception.camera import CameraNoiseConfig
from perception.lidar import ClusterParams
from safety.rss import RssParams
from sensors.camera import CameraModel
from sensors.geometry import SensorModel
from sensors.integrity import IntegrityConfig
from tracking.config import FusionConfig

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = Path(__file__).resolve().parent.parent / 'config' / 'lab_defaults.json'
SECTIONS = ('sensor', 'scene', 'integrity', 'perception', 'fusion', 'attack', 'rss', 'metrics', 'net', 'harness')
AV_CHOICES = (1, 2, 3, 4)


@dataclass(frozen=True)
class SceneDefaults:
    frame_rate: float = 10.0
    frame_count: int = 100
    range_noise: float = 0.02
    object_intensity: float = 0.8
    ground_intensity: float = 0.3


@dataclass(frozen=True)
class HarnessDefaults:
    avs: tuple = AV_CHOICES
    attacks: tuple = ATTACK_CHOICES
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'avs', tuple(int(av) for av in self.avs))
        object.__setattr__(self, 'attacks', tuple(self.attacks))
        if not set(self.avs) <= set(AV_CHOICES):
            raise ConfigError(f"Unknown AV designs {sorted(set(self.avs) - set(AV_CHOICES))}")
        if not set(self.attacks) <= set(ATTACK_CHOICES):
            raise ConfigError(f"Unknown attacks {sorted(set(self.attacks) - set(ATTACK_CHOICES))}")


@dataclass(frozen=True)
class LabConfig:
    sensor: SensorModel
    camera: CameraModel
    scene: SceneDefaults
    integrity: IntegrityConfig
    lidar: ClusterParams
    attacker_lidar: ClusterParams
    camera_noise: CameraNoiseConfig
    fusion: FusionConfig
    attack: AttackConfig
    rss: RssParams
    metrics: MetricsConfig
    net: StreamConfig
    harness: HarnessDefaults
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def scene_kwargs(self) -> dict:
        """Keyword arguments for builtin_scene_suite."""
        return {
            'sensor': self.sensor,
            'camera': self.camera,
            'frame_rate': self.scene.frame_rate,
            'frame_count': self.scene.frame_count,
            'range_noise': self.scene.range_noise,
        }


def deep_merge(base: dict, overrides: dict, path: str = '') -> dict:
    """
    Copy of base with overrides applied; nested dicts merge, everything else replaces.

    Raises:
        ConfigError: an override names a key base does not have
    """
    merged = copy.deepcopy(base)
    for key, value in (overrides or {}).items():
        where = f'{path}.{key}' if path else key
        if key not in merged:
            raise ConfigError(f"Unknown configuration key '{where}'")
        if isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = deep_merge(merged[key], value, where)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def default_config_path() -> Path:
    return Path(getattr(settings, 'LAB_CONFIG_FILE', DEFAULT_CONFIG_FILE))


def read_config_file(path=None) -> dict:
    path = Path(path) if path is not None else default_config_path()
    if not path.exists():
        raise ConfigError(f"Lab configuration file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Lab configuration {path} is not valid JSON: {e}") from e
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"Unknown configuration sections in {path}: {sorted(unknown)}")
    return data


def build_lab_config(data: dict) -> LabConfig:
    missing = [s for s in SECTIONS if s not in data]
    if missing:
        raise ConfigError(f"Missing configuration sections: {missing}")
    sensor = SensorModel.from_config(data['sensor'])
    scene = dict(data['scene'])
    camera = CameraModel.from_config(scene.pop('camera', {}))
    perception = dict(data['perception'])
    unknown = set(perception) - {'lidar', 'attacker_lidar', 'camera'}
    if unknown:
        raise ConfigError(f"Unknown perception sections: {sorted(unknown)}")
    integrity = dict(data['integrity'])
    try:
        scene_defaults = SceneDefaults(**scene)
        integrity_cfg = IntegrityConfig.for_sensor(sensor, **integrity)
        harness = HarnessDefaults(**data['harness'])
    except TypeError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
    return LabConfig(
        sensor=sensor,
        camera=camera,
        scene=scene_defaults,
        integrity=integrity_cfg,
        lidar=ClusterParams.from_config(perception.get('lidar', {})),
        attacker_lidar=ClusterParams.from_config(perception.get('attacker_lidar', {})),
        camera_noise=CameraNoiseConfig.from_config(perception.get('camera', {})),
        fusion=FusionConfig.from_config(data['fusion']),
        attack=AttackConfig.from_config(data['attack']),
        rss=RssParams.from_config(data['rss']),
        metrics=MetricsConfig.from_config(data['metrics']),
        net=StreamConfig.from_config(data['net']),
        harness=harness,
        raw=data,
    )


def load_lab_config(path=None, overrides=None) -> LabConfig:
    """
    Load the lab configuration.

    Args:
        path: JSON file; defaults to settings.LAB_CONFIG_FILE
        overrides: Nested dict merged over the file (plan overrides)

    Returns:
        LabConfig

    Raises:
        ConfigError: missing file, unknown keys or invalid values
    """
    data = deep_merge(read_config_file(path), overrides or {})
    cfg = build_lab_config(data)
    logger.debug(f"Loaded lab configuration from {path or default_config_path()}")
    return cfg
