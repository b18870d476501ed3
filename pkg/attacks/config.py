from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from utils.exceptions import ConfigError

ATTACK_CHOICES = ('baseline', 'X1', 'X3', 'X4', 'X6', 'X7')
KINEMATICS_CHOICES = ('velocity', 'acceleration', 'jerk')


@dataclass(frozen=True)
class AttackConfig:
    """Scheduling, monitoring and execution parameters of the attacker."""

    dt_stable: float = 2.5
    dt_attack: float = 4.5
    rho_0: float = 15.0
    theta_0: float = 0.0
    rho_n: float = 1.0
    theta_n: float = 0.0
    kinematics: str = 'jerk'
    replay_buffer: int = 40
    replay_trigger: Optional[int] = None
    smoothing_repeats: int = 5
    target_min_lifetime: int = 4
    target_bearing_limit_deg: float = 15.0
    target_range: tuple = (5.0, 40.0)
    target_range_center: float = 22.5
    target_lateral_velocity: tuple = (-1.0, 1.0)
    target_forward_velocity: tuple = (-2.0, 5.0)
    object_inflation: float = 1.2
    knn_neighbors: int = 5
    elevation_weight: float = 10.0
    context_radius: float = 0.25
    trace_dims: tuple = (4.0, 2.0, 1.5)
    trace_resolution: float = 0.005
    min_trace_points: int = 16
    fill_threshold: int = 7
    height_channels: int = 2
    height_max_samples: int = 20000
    monitor_gate: float = 2.0
    monitor_confirm_hits: int = 3
    monitor_delete_misses: int = 3
    min_range: float = 0.5

    def __post_init__(self):
        for name in ('target_range', 'target_lateral_velocity', 'target_forward_velocity', 'trace_dims'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.kinematics not in KINEMATICS_CHOICES:
            raise ConfigError(f"Unknown kinematics '{self.kinematics}'; expected one of {KINEMATICS_CHOICES}")
        if self.dt_stable < 0 or self.dt_attack <= 0:
            raise ConfigError("dt_stable must be >= 0 and dt_attack > 0")
        if self.replay_buffer < 1 or self.smoothing_repeats < 1:
            raise ConfigError("replay_buffer and smoothing_repeats must be >= 1")
        if self.replay_trigger is not None and self.replay_trigger < self.replay_buffer:
            raise ConfigError(f"replay_trigger {self.replay_trigger} leaves the {self.replay_buffer}-sweep buffer unfilled")
        if self.knn_neighbors < 1 or self.min_trace_points < 3 or not 0 <= self.fill_threshold <= 8:
            raise ConfigError("knn_neighbors >= 1, min_trace_points >= 3 and fill_threshold in [0, 8] required")
        if self.object_inflation < 1.0 or self.context_radius <= 0 or self.trace_resolution <= 0:
            raise ConfigError("object_inflation >= 1, context_radius > 0 and trace_resolution > 0 required")
        if min(self.trace_dims) <= 0:
            raise ConfigError("trace_dims must be positive")

    @classmethod
    def from_config(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid attack section: {e}") from e

    @property
    def bearing_limit(self) -> float:
        return math.radians(self.target_bearing_limit_deg)

    @property
    def trigger_frame(self) -> int:
        return self.replay_buffer if self.replay_trigger is None else self.replay_trigger
