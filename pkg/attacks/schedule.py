"""
When and where the attacker acts.

AttackSchedule drives the false-object kinematics: a stable portion holding
(theta_0, rho_0), then an attacking portion moving the object toward rho_n.
ReplaySchedule drives the replay attacks from a ring buffer of past sweeps.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .config import AttackConfig

logger = logging.getLogger(__name__)

WAITING = 'waiting'
STABLE = 'stable'
ATTACKING = 'attacking'
EXHAUSTED = 'exhausted'


@dataclass(frozen=True)
class Directive:
    kind: str = 'none'
    theta: Optional[float] = None
    range: Optional[float] = None
    target_id: Optional[int] = None
    replay_index: Optional[int] = None


NO_ACTION = Directive()


def jerk_for(rho_0: float, rho_n: float, dt_attack: float) -> float:
    """Constant jerk moving from rest at rho_0 to rho_n in dt_attack."""
    return 6.0 * (rho_n - rho_0) / dt_attack ** 3


@dataclass(frozen=True)
class JerkState:
    j: float
    a: float = 0.0
    v: float = 0.0
    r: float = 0.0
    k: int = 0


def jerk_step(state: JerkState, dt: float) -> JerkState:
    """One step of the trapezoidal constant-jerk recursion."""
    j = state.j
    a = state.a + j * dt
    v = state.v + (a + state.a) / 2.0 * dt + 0.5 * j * dt ** 2
    r = (state.r + (v + state.v) / 2.0 * dt + 0.5 * ((a + state.a) / 2.0) * dt ** 2
         + j * dt ** 3 / 6.0)
    return JerkState(j=j, a=a, v=v, r=r, k=state.k + 1)


class AttackSchedule:
    """
    Phase machine waiting -> stable -> attacking -> exhausted.

    The attacking portion has round(dt_attack / frame_interval) frames,
    k = 0 .. K-1, with r_0 = rho_0 on its first frame.
    """

    def __init__(self, cfg: AttackConfig, frame_interval: float):
        self.cfg = cfg
        self.frame_interval = frame_interval
        self.attack_frames = max(1, int(round(cfg.dt_attack / frame_interval)))
        self.phase = WAITING
        self.start_time = None
        self.rho_0, self.rho_n = cfg.rho_0, cfg.rho_n
        self.theta_0, self.theta_n = cfg.theta_0, cfg.theta_n
        self.kinematic = None

    def start(self, now: float, rho_0=None, theta_0=None, theta_n=None):
        self.start_time = now
        if rho_0 is not None:
            self.rho_0 = float(rho_0)
        if theta_0 is not None:
            self.theta_0 = float(theta_0)
            self.theta_n = float(theta_0 if theta_n is None else theta_n)
        self.kinematic = JerkState(j=jerk_for(self.rho_0, self.rho_n, self.cfg.dt_attack), r=self.rho_0)
        self._enter(STABLE)

    def _enter(self, phase):
        if phase != self.phase:
            logger.info(f"Attack schedule {self.phase} -> {phase}")
            self.phase = phase

    @property
    def jerk(self) -> float:
        return jerk_for(self.rho_0, self.rho_n, self.cfg.dt_attack)

    def range_at(self, k: int) -> float:
        """Object range on attacking frame k."""
        t = k * self.frame_interval
        span = self.rho_n - self.rho_0
        if self.cfg.kinematics == 'velocity':
            return self.rho_0 + span / self.cfg.dt_attack * t
        if self.cfg.kinematics == 'acceleration':
            return self.rho_0 + span / self.cfg.dt_attack ** 2 * t ** 2
        if self.kinematic.k > k:
            self.kinematic = JerkState(j=self.kinematic.j, r=self.rho_0)
        while self.kinematic.k < k:
            self.kinematic = jerk_step(self.kinematic, self.frame_interval)
        return self.kinematic.r

    def theta_at(self, k: int) -> float:
        fraction = min(1.0, k * self.frame_interval / self.cfg.dt_attack)
        return self.theta_0 + (self.theta_n - self.theta_0) * fraction

    def step(self, now: float) -> Directive:
        """Directive for the sweep at time now."""
        if self.phase == WAITING:
            return NO_ACTION
        elapsed = now - self.start_time
        if elapsed < self.cfg.dt_stable - 1e-9:
            self._enter(STABLE)
            return Directive('establish', theta=self.theta_0, range=self.rho_0)
        k = int(round((elapsed - self.cfg.dt_stable) / self.frame_interval))
        if k >= self.attack_frames:
            self._enter(EXHAUSTED)
            return NO_ACTION
        self._enter(ATTACKING)
        return Directive('move', theta=self.theta_at(k), range=self.range_at(k))


def schedule_step(sched: AttackSchedule, now: float) -> Directive:
    return sched.step(now)


def ping_pong_order(capacity: int, repeats: int) -> list:
    """
    Buffer positions for a reverse replay, newest first.

    Both ends are held for `repeats` frames; the cycle then repeats.
    """
    if capacity == 1:
        return [0]
    newest = capacity - 1
    down = [newest] * repeats + list(range(newest - 1, 0, -1))
    up = [0] * repeats + list(range(1, newest))
    return down + up


class ReplaySchedule:
    """
    Ring buffer of past sweeps replayed after a trigger frame.

    Forward replay buffers the `capacity` sweeps before the trigger and plays
    them oldest first, wrapping. Reverse replay also buffers the trigger sweep,
    holds it, then ping-pongs through the buffer.
    """

    def __init__(self, capacity: int, trigger: int, reverse: bool = False, repeats: int = 5):
        self.capacity = capacity
        self.trigger = trigger
        self.reverse = reverse
        self.buffer = deque(maxlen=capacity)
        self.order = ping_pong_order(capacity, repeats) if reverse else None

    @classmethod
    def from_config(cls, cfg: AttackConfig, reverse=False):
        return cls(cfg.replay_buffer, cfg.trigger_frame, reverse=reverse, repeats=cfg.smoothing_repeats)

    @property
    def phase(self):
        return STABLE if len(self.buffer) < self.capacity else ATTACKING

    def step(self, frame: int, sweep):
        """
        Returns:
            tuple: (Directive, buffered sweep to replay or None)
        """
        if frame < self.trigger:
            self.buffer.append(sweep)
            return NO_ACTION, None
        if frame == self.trigger and self.reverse:
            self.buffer.append(sweep)
        if not self.buffer:
            return NO_ACTION, None
        step = frame - self.trigger
        if self.reverse:
            position = self.order[step % len(self.order)]
        else:
            position = step % len(self.buffer)
        position = min(position, len(self.buffer) - 1)
        return Directive('replay', replay_index=position), self.buffer[position]
