from django.test import SimpleTestCase

from attacks.config import AttackConfig
from attacks.schedule import (
    ATTACKING, EXHAUSTED, STABLE, WAITING, AttackSchedule, ReplaySchedule, jerk_for, ping_pong_order,
)
from utils.exceptions import ConfigError

FRAME = 0.1


def jerk_closed_form(rho_0, j, dt, k):
    return rho_0 + j * dt ** 3 * (k * (k + 1) * (2 * k + 1) / 12.0 + k * (k + 1) / 4.0 - k / 12.0)


class JerkKinematicsTests(SimpleTestCase):

    def setUp(self):
        self.schedule = AttackSchedule(AttackConfig(), FRAME)
        self.schedule.start(0.0)

    def test_jerk_value(self):
        self.assertAlmostEqual(jerk_for(15.0, 1.0, 4.5), -0.921811, delta=1e-6)
        self.assertAlmostEqual(self.schedule.jerk, -0.921811, delta=1e-6)

    def test_attack_frames(self):
        self.assertEqual(self.schedule.attack_frames, 45)

    def test_recursion_matches_closed_form(self):
        j = self.schedule.jerk
        for k in (0, 1, 2, 10, 44):
            self.assertAlmostEqual(self.schedule.range_at(k), jerk_closed_form(15.0, j, FRAME, k), delta=1e-9)

    def test_endpoint_near_target(self):
        r_end = self.schedule.range_at(44)
        self.assertAlmostEqual(r_end, 1.0103, delta=1e-3)
        self.assertLess(abs(r_end - 1.0), 0.6)

    def test_monotone_and_bounded(self):
        ranges = [self.schedule.range_at(k) for k in range(45)]
        self.assertEqual(ranges[0], 15.0)
        for previous, current in zip(ranges, ranges[1:]):
            self.assertLessEqual(current, previous)
        for r in ranges:
            self.assertGreaterEqual(r, 0.0)
            self.assertLessEqual(r, 16.0)

    def test_range_at_rewinds(self):
        late = self.schedule.range_at(30)
        early = self.schedule.range_at(3)
        self.assertAlmostEqual(early, jerk_closed_form(15.0, self.schedule.jerk, FRAME, 3), delta=1e-9)
        self.assertAlmostEqual(self.schedule.range_at(30), late, delta=1e-12)


class OtherKinematicsTests(SimpleTestCase):

    def test_velocity(self):
        schedule = AttackSchedule(AttackConfig(kinematics='velocity'), FRAME)
        schedule.start(0.0)
        for k in (0, 5, 44):
            self.assertAlmostEqual(schedule.range_at(k), 15.0 - 14.0 / 4.5 * k * FRAME, delta=1e-9)

    def test_acceleration(self):
        schedule = AttackSchedule(AttackConfig(kinematics='acceleration'), FRAME)
        schedule.start(0.0)
        for k in (0, 5, 44):
            self.assertAlmostEqual(schedule.range_at(k), 15.0 - 14.0 / 4.5 ** 2 * (k * FRAME) ** 2, delta=1e-9)

    def test_theta_interpolation(self):
        schedule = AttackSchedule(AttackConfig(theta_0=0.0, theta_n=0.2), FRAME)
        schedule.start(0.0)
        self.assertEqual(schedule.theta_at(0), 0.0)
        self.assertAlmostEqual(schedule.theta_at(45), 0.2)
        self.assertAlmostEqual(schedule.theta_at(100), 0.2)

    def test_unknown_kinematics(self):
        with self.assertRaises(ConfigError):
            AttackConfig(kinematics='snap')


class PhaseTests(SimpleTestCase):

    def test_phase_sequence(self):
        schedule = AttackSchedule(AttackConfig(), FRAME)
        self.assertEqual(schedule.phase, WAITING)
        self.assertEqual(schedule.step(0.0).kind, 'none')

        schedule.start(0.0)
        first = schedule.step(0.0)
        self.assertEqual((first.kind, first.range, first.theta), ('establish', 15.0, 0.0))
        self.assertEqual(schedule.step(2.4).kind, 'establish')
        self.assertEqual(schedule.phase, STABLE)

        move = schedule.step(2.5)
        self.assertEqual(move.kind, 'move')
        self.assertEqual(move.range, 15.0)
        self.assertEqual(schedule.phase, ATTACKING)
        self.assertAlmostEqual(schedule.step(2.5 + 4.4).range, schedule.range_at(44))

        self.assertEqual(schedule.step(7.0).kind, 'none')
        self.assertEqual(schedule.phase, EXHAUSTED)

    def test_start_with_target(self):
        schedule = AttackSchedule(AttackConfig(), FRAME)
        schedule.start(1.0, rho_0=24.0, theta_0=0.05)
        directive = schedule.step(1.0)
        self.assertEqual((directive.range, directive.theta), (24.0, 0.05))
        self.assertAlmostEqual(schedule.jerk, 6.0 * (1.0 - 24.0) / 4.5 ** 3)


class ReplayScheduleTests(SimpleTestCase):

    def test_ping_pong_order(self):
        self.assertEqual(ping_pong_order(4, 2), [3, 3, 2, 1, 0, 0, 1, 2])
        self.assertEqual(ping_pong_order(1, 5), [0])

    def test_forward_replay(self):
        replay = ReplaySchedule(capacity=40, trigger=50)
        played = {}
        for frame in range(120):
            directive, buffered = replay.step(frame, frame)
            if buffered is not None:
                played[frame] = buffered
                self.assertEqual(directive.kind, 'replay')
        self.assertNotIn(49, played)
        self.assertEqual(played[50], 10)
        self.assertEqual(played[89], 49)
        self.assertEqual(played[90], 10)

    def test_reverse_replay(self):
        replay = ReplaySchedule(capacity=40, trigger=60, reverse=True, repeats=5)
        played = {}
        for frame in range(120):
            _, buffered = replay.step(frame, frame)
            if buffered is not None:
                played[frame] = buffered
        for frame in range(60, 65):
            self.assertEqual(played[frame], 60)
        self.assertEqual(played[65], 59)
        for frame in range(103, 108):
            self.assertEqual(played[frame], 21)
        self.assertEqual(played[108], 22)

    def test_from_config(self):
        replay = ReplaySchedule.from_config(AttackConfig(), reverse=True)
        self.assertEqual((replay.capacity, replay.trigger), (40, 40))

    def test_trigger_before_buffer_fills(self):
        with self.assertRaises(ConfigError):
            AttackConfig(replay_buffer=40, replay_trigger=10)
