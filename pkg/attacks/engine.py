"""
The attacker loop: monitor, schedule, execute, once per sweep.

An Attacker is constructed with the sensor model and its own configuration
and afterwards only ever receives sweeps; the sweep timestamp is its clock.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from perception.lidar import ClusterParams, non_ground_mask
from sensors.geometry import SensorModel
from sensors.pointcloud import RANGE_RESOLUTION, Sweep, quantize_range, restamp, sort_points
from utils.csv_utils import write_rows

from .config import ATTACK_CHOICES, AttackConfig
from .execution import (
    TraceSurface, car_trace, inpaint_as_background, inpaint_as_object, missing_cells, missing_trace_rows,
    point_mask_from_object, point_mask_from_trace,
)
from .monitor import MonitorState, TargetLock, monitor_height, monitor_objects, select_target
from .schedule import ATTACKING, NO_ACTION, WAITING, AttackSchedule, Directive, ReplaySchedule

logger = logging.getLogger(__name__)

NAIVE_APPEND = 'naive_append'
CONTEXT_AWARE = ('X6', 'X7')

DECISION_FIELDS = ('frame', 'time', 'attack', 'phase', 'target_id', 'theta', 'range', 'directive', 'modified_points')

ATTACKER_DETECTOR = ClusterParams(min_pts=12, ground_margin=0.2)


@dataclass(frozen=True)
class AttackDecision:
    frame: int
    time: float
    attack: str
    phase: str
    target_id: Optional[int]
    theta: Optional[float]
    range: Optional[float]
    directive: str
    modified_points: int

    def as_row(self):
        return [getattr(self, name) for name in DECISION_FIELDS]


class Attacker:
    """
    One attacker instance per stream.

    attack is one of baseline, X1, X3, X4, X6, X7, or naive_append (the
    row-injecting counterexample, never part of an experiment plan).
    """

    def __init__(self, attack: str, sensor: SensorModel, cfg: AttackConfig = AttackConfig(),
                 detector: ClusterParams = ATTACKER_DETECTOR):
        if attack not in ATTACK_CHOICES + (NAIVE_APPEND,):
            raise ValueError(f"Unknown attack '{attack}'")
        self.attack = attack
        self.sensor = sensor
        self.cfg = cfg
        self.detector = detector
        self.state = MonitorState.for_sensor(sensor, cfg)
        self.schedule = AttackSchedule(cfg, 1.0 / sensor.rotation_rate)
        self.replay = None
        if attack in ('X3', 'X4'):
            self.replay = ReplaySchedule.from_config(cfg, reverse=attack == 'X4')
        self.target: Optional[TargetLock] = None
        self.commence_frame = None
        self.frame = -1
        self.decisions = []
        self._trace_key = self._trace = None
        self._surface_key = self._surface = None

    @property
    def phase(self) -> str:
        if self.replay is not None:
            return self.replay.phase if self.frame >= self.replay.trigger else WAITING
        if self.attack == 'X6':
            return ATTACKING if self.commence_frame is not None and self.frame >= self.commence_frame else WAITING
        return self.schedule.phase

    def attack_step(self, sweep: Sweep) -> Sweep:
        """Monitor the clean sweep, decide, and return the sweep to forward."""
        self.frame += 1
        now = sweep.timestamp
        monitor_height(self.state, sweep, self.cfg.height_channels)
        if self.attack in CONTEXT_AWARE:
            monitor_objects(self.state, sweep, self.cfg, self.detector)

        if self.attack == 'baseline':
            out, directive = sweep, NO_ACTION
        elif self.replay is not None:
            out, directive = self._replay(sweep)
        elif self.attack in ('X1', NAIVE_APPEND):
            out, directive = self._false_object(sweep, now)
        else:
            out, directive = self._target_attack(sweep, now)

        self._record(sweep, out, directive, now)
        return out

    def _record(self, clean: Sweep, out: Sweep, directive: Directive, now: float):
        if directive.kind == 'replay':
            modified = -1
        elif len(out) != len(clean):
            modified = len(out) - len(clean)
        else:
            modified = int(np.count_nonzero(out.points['range'] != clean.points['range']))
        self.decisions.append(AttackDecision(
            frame=self.frame,
            time=now,
            attack=self.attack,
            phase=self.phase,
            target_id=directive.target_id,
            theta=directive.theta,
            range=directive.range,
            directive=directive.kind,
            modified_points=modified,
        ))

    def _replay(self, sweep: Sweep):
        directive, buffered = self.replay.step(self.frame, sweep)
        if buffered is None:
            return sweep, directive
        return restamp(buffered, sweep.start_us, self.sensor, index=sweep.index), directive

    def _false_object(self, sweep: Sweep, now: float):
        h = self.state.height
        if h is None:
            return sweep, NO_ACTION
        if self.schedule.phase == WAITING:
            self.schedule.start(now)
        directive = self.schedule.step(now)
        if directive.kind == 'none':
            return sweep, directive

        trace = self._car_trace(directive.theta, directive.range, h)
        if self.attack == NAIVE_APPEND:
            points = np.concatenate([sweep.points, trace])
            return sweep.with_points(sort_points(points)), directive

        dropped = missing_trace_rows(trace, missing_cells(sweep, self.sensor, self.cfg.fill_threshold), self.sensor)
        trace = trace[~dropped]
        # rows already returning from a real obstacle keep their range
        free = ~non_ground_mask(sweep.points, h, self.detector.ground_margin)
        mask = point_mask_from_trace(sweep, trace) & free
        surface = self._trace_surface(trace, dropped)
        return inpaint_as_object(sweep, mask, trace, h, self.cfg.min_trace_points, surface=surface), directive

    def _car_trace(self, theta: float, rho: float, h: float) -> np.ndarray:
        key = (theta, rho, h)
        if key != self._trace_key:
            self._trace_key = key
            self._trace = car_trace(self.sensor, theta, rho, h, self.cfg.trace_dims, self.cfg.trace_resolution,
                                    self.cfg.min_range)
        return self._trace

    def _trace_surface(self, trace: np.ndarray, dropped: np.ndarray):
        """Surface fitted to the current trace, refitted only when the trace or its realizable rows change."""
        if len(trace) == 0:
            return None
        key = (self._trace_key, np.packbits(dropped).tobytes())
        if key != self._surface_key:
            self._surface_key = key
            self._surface = TraceSurface(trace, self.cfg.min_trace_points)
        return self._surface

    def _acquire_target(self, now: float):
        if self.target is not None:
            self.target.refresh(self.state, now)
            return
        target_id = select_target(self.state, self.cfg)
        if target_id is None:
            return
        self.target = TargetLock.from_track(self.state.track(target_id), now)
        self.commence_frame = self.frame + 1
        logger.info(f"Attacker selected target {target_id} at range {np.hypot(*self.target.position):.1f} m; "
                    f"commencing at frame {self.commence_frame}")

    def _target_attack(self, sweep: Sweep, now: float):
        self._acquire_target(now)
        if self.target is None or self.frame < self.commence_frame or self.state.height is None:
            return sweep, NO_ACTION

        box = self.target.predicted_box(now)
        target_range = float(math.hypot(box.center[0], box.center[1]))
        bearing = math.atan2(box.center[1], box.center[0])
        mask = point_mask_from_object(sweep, box.inflated(self.cfg.object_inflation))

        if self.attack == 'X6':
            directive = Directive('remove', theta=bearing, range=target_range, target_id=self.target.id)
            return self._remove(sweep, mask), directive

        if self.schedule.phase == WAITING:
            self.schedule.start(now, rho_0=target_range, theta_0=bearing)
        scheduled = self.schedule.step(now)
        if scheduled.kind == 'none':
            return sweep, scheduled
        shift = scheduled.range - target_range
        directive = Directive('move', theta=bearing, range=scheduled.range, target_id=self.target.id)
        return self._translate(sweep, mask, shift), directive

    def _remove(self, sweep: Sweep, mask: np.ndarray) -> Sweep:
        return inpaint_as_background(sweep, mask, self.state.height, self.cfg.knn_neighbors,
                                     self.cfg.elevation_weight, self.cfg.context_radius, self.sensor.max_range)

    def _translate(self, sweep: Sweep, mask: np.ndarray, shift: float) -> Sweep:
        """Remove the target, then put its own points back shifted along their rays."""
        out = self._remove(sweep, mask)
        rows = np.flatnonzero(mask & non_ground_mask(sweep.points, self.state.height, self.detector.ground_margin))
        if len(rows):
            shifted = np.maximum(sweep.points['range'][rows] + shift, self.cfg.min_range)
            out.points['range'][rows] = np.maximum(quantize_range(shifted), RANGE_RESOLUTION)
        return out

    def write_log(self, path):
        write_rows(path, DECISION_FIELDS, [d.as_row() for d in self.decisions])


def attack_step(attacker: Attacker, sweep: Sweep) -> Sweep:
    return attacker.attack_step(sweep)
