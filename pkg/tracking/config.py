from __future__ import annotations

from dataclasses import dataclass, fields

from utils.exceptions import ConfigError


@dataclass(frozen=True)
class FusionConfig:
    """Tracker, association and fusion parameters for the victim designs."""

    association_gate: float = 2.0
    association_gate_px: float = 50.0
    camera3d_gate: float = 4.0
    t2t_gate: float = 3.0
    t2t_consistency_prob: float = 0.99
    confirm_hits: int = 3
    delete_misses: int = 5
    ci_weight: float = 0.5
    asymmetry_window_len: int = 10
    asymmetry_min_camera_ratio: float = 0.3
    q_position: float = 0.1
    q_velocity: float = 0.5
    q_box: float = 0.01
    r_lidar_position: float = 0.2
    r_lidar_box: float = 0.3
    r_lidar_yaw: float = 0.2
    r_camera_px: float = 4.0
    r_camera_box: float = 0.5
    r_camera_yaw: float = 0.5
    initial_velocity_std: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.ci_weight <= 1.0:
            raise ConfigError(f"ci_weight must be in [0, 1], got {self.ci_weight}")
        if self.confirm_hits < 1 or self.delete_misses < 1 or self.asymmetry_window_len < 1:
            raise ConfigError("confirm_hits, delete_misses and asymmetry_window_len must be >= 1")
        if not 0.0 <= self.asymmetry_min_camera_ratio <= 1.0:
            raise ConfigError("asymmetry_min_camera_ratio must be in [0, 1]")
        if not 0.0 < self.t2t_consistency_prob < 1.0:
            raise ConfigError(f"t2t_consistency_prob must be in (0, 1), got {self.t2t_consistency_prob}")
        for f in fields(self):
            if f.name.startswith(('q_', 'r_')) and getattr(self, f.name) <= 0:
                raise ConfigError(f"{f.name} must be positive")

    @classmethod
    def from_config(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid fusion section: {e}") from e
