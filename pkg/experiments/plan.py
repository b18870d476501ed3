"""
Experiment plans: which scenes, AV designs and attacks to run, where to write
the results, and configuration overrides layered over the lab defaults.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from django.conf import settings

from attacks.config import ATTACK_CHOICES
from utils.exceptions import ConfigError
from utils.lab_config import AV_CHOICES, load_lab_config

logger = logging.getLogger(__name__)

BASELINE = 'baseline'


@dataclass(frozen=True)
class ExperimentPlan:
    """
    A run matrix. The baseline condition is always part of the plan, since
    every increment is measured against it.

    scenes holds scene file paths or builtin scene names; an empty tuple
    means the whole builtin suite.
    """

    scenes: tuple = ()
    avs: tuple = AV_CHOICES
    attacks: tuple = ATTACK_CHOICES
    seed: int = 0
    output_dir: Optional[str] = None
    overrides: dict = field(default_factory=dict)
    frame_count: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'scenes', tuple(str(s) for s in self.scenes))
        object.__setattr__(self, 'avs', tuple(sorted({int(av) for av in self.avs})))
        attacks = [a for a in ATTACK_CHOICES if a in set(self.attacks) | {BASELINE}]
        unknown = set(self.attacks) - set(ATTACK_CHOICES)
        if unknown:
            raise ConfigError(f"Unknown attacks in plan: {sorted(unknown)}")
        object.__setattr__(self, 'attacks', tuple(attacks))
        if not self.avs or not set(self.avs) <= set(AV_CHOICES):
            raise ConfigError(f"Plan AV designs must be a non-empty subset of {AV_CHOICES}, got {self.avs}")
        if self.frame_count is not None and self.frame_count < 1:
            raise ConfigError("Plan frame_count must be >= 1")

    @property
    def attacked(self) -> tuple:
        return tuple(a for a in self.attacks if a != BASELINE)

    @property
    def output_root(self) -> Path:
        return Path(self.output_dir or settings.LAB_OUTPUT_ROOT)

    def lab_config(self):
        overrides = dict(self.overrides)
        if self.frame_count is not None:
            overrides = {**overrides, 'scene': {**overrides.get('scene', {}), 'frame_count': self.frame_count}}
        return load_lab_config(overrides=overrides)

    def to_dict(self) -> dict:
        data = asdict(self)
        data['scenes'], data['avs'], data['attacks'] = list(self.scenes), list(self.avs), list(self.attacks)
        return data

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid experiment plan: {e}") from e

    @classmethod
    def from_defaults(cls, **kwargs):
        """Plan built from the harness section of the lab configuration."""
        harness = load_lab_config().harness
        kwargs.setdefault('avs', harness.avs)
        kwargs.setdefault('attacks', harness.attacks)
        kwargs.setdefault('seed', harness.seed)
        return cls(**kwargs)


def load_plan(path) -> ExperimentPlan:
    """
    Read a JSON plan file.

    Raises:
        ConfigError: missing or malformed file
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Plan file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Plan file {path} is not valid JSON: {e}") from e
    plan = ExperimentPlan.from_dict(data)
    logger.info(f"Loaded plan {path}: {len(plan.scenes) or 'all builtin'} scenes, AVs {plan.avs}, "
                f"attacks {plan.attacks}")
    return plan
