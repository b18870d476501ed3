import math
import tempfile
from pathlib import Path
from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase, tag

from attacks.config import AttackConfig
from attacks.engine import DECISION_FIELDS, NAIVE_APPEND, Attacker, attack_step
from attacks.execution import TraceSurface
from attacks.schedule import ATTACKING, STABLE, WAITING
from perception.lidar import detect_lidar
from scenes.render import render_sweep
from scenes.scene import Scene, SceneObject
from scenes.suite import EGO_SPEED, builtin_scene_suite
from scenes.trajectory import Trajectory
from sensors.geometry import SensorModel
from sensors.integrity import IntegrityConfig, IntegrityMonitor
from utils.csv_utils import read_rows

SMALL_SENSOR = SensorModel.uniform(azimuth_count=360)
HEIGHT = 1.7


def lead_scene(x, frame_count, sensor=SMALL_SENSOR):
    lead = SceneObject(id=1, kind='car', trajectory=Trajectory.straight(x, 0.0, EGO_SPEED))
    return Scene(name='lead', ego=Trajectory.straight(0.0, 0.0, EGO_SPEED), objects=(lead,), sensor=sensor,
                 frame_count=frame_count, range_noise=0.02)


def empty_scene(frame_count, sensor=SMALL_SENSOR):
    return Scene(name='empty', ego=Trajectory.straight(0.0, 0.0, EGO_SPEED), sensor=sensor,
                 frame_count=frame_count, range_noise=0.0)


def run_attack(attacker, scene, frames=None):
    """Yields (clean sweep, attacked sweep, truth) per frame."""
    for k in range(scene.frame_count if frames is None else frames):
        clean, truth = render_sweep(scene, k)
        yield clean, attack_step(attacker, clean), truth


def near(detections, xy, distance):
    return [d for d in detections if math.hypot(d.center[0] - xy[0], d.center[1] - xy[1]) <= distance]


class AttackerSetupTests(SimpleTestCase):

    def test_unknown_attack(self):
        with self.assertRaises(ValueError):
            Attacker('X2', SMALL_SENSOR)

    def test_baseline_passes_through(self):
        attacker = Attacker('baseline', SMALL_SENSOR)
        for clean, out, _ in run_attack(attacker, lead_scene(20.0, 3)):
            self.assertTrue(out.same_points(clean))
        self.assertEqual([d.directive for d in attacker.decisions], ['none'] * 3)
        self.assertEqual([d.modified_points for d in attacker.decisions], [0] * 3)

    def test_decision_log(self):
        attacker = Attacker('X1', SMALL_SENSOR)
        list(run_attack(attacker, empty_scene(3)))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'log' / 'attack.csv'
            attacker.write_log(path)
            rows = read_rows(path)
        self.assertEqual(len(rows), 3)
        self.assertEqual(tuple(rows[0].keys()), DECISION_FIELDS)
        self.assertEqual(rows[0]['directive'], 'establish')
        self.assertEqual(rows[0]['phase'], STABLE)


class FalseObjectTests(SimpleTestCase):

    def test_x1_establishes_car(self):
        attacker = Attacker('X1', SMALL_SENSOR)
        clean, truth = render_sweep(empty_scene(1), 0)
        out = attacker.attack_step(clean)
        self.assertTrue(out.angles_equal(clean))
        self.assertGreater(attacker.decisions[0].modified_points, 0)
        self.assertTrue(near(detect_lidar(out, HEIGHT), (15.0, 0.0), 1.0))
        self.assertFalse(detect_lidar(clean, HEIGHT))

    def test_x1_leaves_real_objects_in_place(self):
        attacker = Attacker('X1', SMALL_SENSOR)
        clean, truth = render_sweep(lead_scene(25.0, 1), 0)
        out = attacker.attack_step(clean)
        lead = truth[0][1]
        body = lead.contains(clean.cartesian(), inflate=1.1) & (clean.cartesian()[:, 2] > 0.5 - HEIGHT)
        self.assertTrue(body.any())
        np.testing.assert_array_equal(out.points['range'][body], clean.points['range'][body])
        detections = detect_lidar(out, HEIGHT)
        self.assertTrue(near(detections, lead.center, 1.5))
        self.assertTrue(near(detections, (15.0, 0.0), 1.0))

    def test_x1_stops_after_schedule(self):
        cfg = AttackConfig(dt_stable=0.2, dt_attack=0.2)
        attacker = Attacker('X1', SMALL_SENSOR, cfg)
        frames = list(run_attack(attacker, empty_scene(6)))
        self.assertEqual([d.directive for d in attacker.decisions], ['establish'] * 2 + ['move'] * 2 + ['none'] * 2)
        self.assertTrue(frames[-1][1].same_points(frames[-1][0]))

    def test_x1_fits_its_surface_once_while_established(self):
        attacker = Attacker('X1', SMALL_SENSOR, AttackConfig(dt_stable=0.5, dt_attack=0.5))
        with patch('attacks.engine.TraceSurface', wraps=TraceSurface) as fit:
            list(run_attack(attacker, empty_scene(5)))
        self.assertEqual([d.directive for d in attacker.decisions], ['establish'] * 5)
        self.assertEqual(fit.call_count, 1)
        self.assertTrue(all(d.modified_points > 0 for d in attacker.decisions))

    def test_naive_append_fails_max_points(self):
        # Every ray of this sensor reaches the ground, so the grid is full
        sensor = SensorModel.uniform(channels=16, elevation_min_deg=-30.0, elevation_max_deg=-2.0, azimuth_count=360)
        clean, _ = render_sweep(empty_scene(1, sensor=sensor), 0)
        self.assertEqual(len(clean), sensor.max_points)

        naive = Attacker(NAIVE_APPEND, sensor).attack_step(clean)
        self.assertGreater(len(naive), sensor.max_points)
        verdict = IntegrityMonitor(sensor, IntegrityConfig.for_sensor(sensor)).check(naive)
        self.assertFalse(verdict.zeta_alpha)

        contained = Attacker('X1', sensor).attack_step(clean)
        self.assertTrue(IntegrityMonitor(sensor, IntegrityConfig.for_sensor(sensor)).check(contained).zeta)


class ReplayTests(SimpleTestCase):

    def test_x3_replays_forward(self):
        scene = lead_scene(20.0, 52)
        attacker = Attacker('X3', SMALL_SENSOR, AttackConfig(replay_trigger=50))
        frames = list(run_attack(attacker, scene))
        clean_10 = frames[10][0]
        clean_50, attacked_50 = frames[50][0], frames[50][1]
        np.testing.assert_array_equal(attacked_50.points['range'], clean_10.points['range'])
        self.assertGreaterEqual(attacked_50.points['timestamp'].min(), clean_50.timestamp)
        self.assertLess(attacked_50.points['timestamp'].max(), clean_50.timestamp + 0.1)
        self.assertEqual(attacked_50.timestamp, clean_50.timestamp)
        self.assertEqual(attacked_50.index, 50)
        self.assertTrue(frames[49][1].same_points(frames[49][0]))
        self.assertEqual(attacker.decisions[50].modified_points, -1)
        self.assertEqual(attacker.decisions[50].directive, 'replay')

    def test_x4_holds_then_reverses(self):
        scene = lead_scene(20.0, 66)
        attacker = Attacker('X4', SMALL_SENSOR, AttackConfig(replay_trigger=60))
        frames = list(run_attack(attacker, scene))
        for k in range(60, 65):
            np.testing.assert_array_equal(frames[k][1].points['range'], frames[60][0].points['range'])
        np.testing.assert_array_equal(frames[65][1].points['range'], frames[59][0].points['range'])
        self.assertEqual(attacker.phase, ATTACKING)

    def test_replay_is_restamped(self):
        cfg = AttackConfig(replay_buffer=2, replay_trigger=3)
        attacker = Attacker('X3', SMALL_SENSOR, cfg)
        monitor = IntegrityMonitor(SMALL_SENSOR, IntegrityConfig.for_sensor(SMALL_SENSOR))
        frames = list(run_attack(attacker, lead_scene(20.0, 6)))
        for clean, out, _ in frames:
            self.assertTrue(monitor.check(out).zeta)
            self.assertEqual(out.timestamp, clean.timestamp)
        clean, replayed, _ = frames[3]
        np.testing.assert_array_equal(replayed.points['range'], frames[1][0].points['range'])
        self.assertGreaterEqual(replayed.points['timestamp'].min(), clean.timestamp)
        self.assertLess(replayed.points['timestamp'].max(), clean.timestamp + 0.1)


class TargetAttackTests(SimpleTestCase):

    def test_x6_removes_target(self):
        attacker = Attacker('X6', SMALL_SENSOR)
        frames = list(run_attack(attacker, lead_scene(20.0, 8)))
        self.assertEqual(attacker.commence_frame, 4)
        self.assertEqual(attacker.phase, ATTACKING)
        clean, out, truth = frames[-1]
        center = truth[0][1].center
        self.assertTrue(near(detect_lidar(clean, HEIGHT), center, 3.0))
        self.assertFalse(near(detect_lidar(out, HEIGHT), center, 3.0))
        self.assertTrue(out.angles_equal(clean))
        self.assertEqual(attacker.decisions[-1].directive, 'remove')
        self.assertEqual(attacker.decisions[-1].target_id, attacker.target.id)
        for clean, out, _ in frames[:4]:
            self.assertTrue(out.same_points(clean))

    def test_x6_waits_without_target(self):
        attacker = Attacker('X6', SMALL_SENSOR)
        list(run_attack(attacker, empty_scene(5)))
        self.assertIsNone(attacker.target)
        self.assertEqual(attacker.phase, WAITING)

    @tag('slow')
    def test_x7_moves_target_closer(self):
        cfg = AttackConfig(dt_stable=0.5, dt_attack=1.0, rho_n=8.0)
        attacker = Attacker('X7', SMALL_SENSOR, cfg)
        frames = list(run_attack(attacker, lead_scene(25.0, 16)))
        decision = attacker.decisions[15]
        self.assertEqual(decision.directive, 'move')
        self.assertLess(decision.range, 22.0)

        clean, out, truth = frames[15]
        center = truth[0][1].center
        detections = detect_lidar(out, HEIGHT)
        self.assertFalse(near(detections, center, 2.0))
        moved = [d for d in detections if abs(math.atan2(d.center[1], d.center[0])) < 0.1]
        self.assertTrue(moved)
        self.assertTrue(any(abs(math.hypot(d.center[0], d.center[1]) - decision.range) <= 1.5 for d in moved))
        self.assertTrue(out.angles_equal(clean))


@tag('slow')
class ContainmentTests(SimpleTestCase):
    """Every attack edits ranges only and passes every integrity check on every builtin scene."""

    def test_all_attacks_on_builtin_scenes(self):
        cfg = AttackConfig(dt_stable=1.0, dt_attack=1.5, replay_buffer=10)
        for scene in builtin_scene_suite(sensor=SMALL_SENSOR, frame_count=30):
            for attack in ('X1', 'X3', 'X4', 'X6', 'X7'):
                attacker = Attacker(attack, scene.sensor, cfg)
                monitor = IntegrityMonitor(scene.sensor, IntegrityConfig.for_sensor(scene.sensor))
                for clean, out, _ in run_attack(attacker, scene):
                    self.assertTrue(monitor.check(out).zeta, f'{scene.name} {attack} frame {out.index}')
                    if attack not in ('X3', 'X4'):
                        self.assertTrue(out.angles_equal(clean), f'{scene.name} {attack} frame {out.index}')

    def test_all_attacks_on_full_size_scenes(self):
        for scene in builtin_scene_suite():
            for attack in ('X1', 'X3', 'X4', 'X6', 'X7'):
                attacker = Attacker(attack, scene.sensor)
                monitor = IntegrityMonitor(scene.sensor, IntegrityConfig.for_sensor(scene.sensor))
                frames = 0
                for clean, out, _ in run_attack(attacker, scene):
                    frames += 1
                    self.assertTrue(monitor.check(out).zeta, f'{scene.name} {attack} frame {out.index}')
                    if attack not in ('X3', 'X4'):
                        self.assertTrue(out.angles_equal(clean), f'{scene.name} {attack} frame {out.index}')
                self.assertEqual(frames, scene.frame_count)

    def test_selected_targets_are_real(self):
        selections = real = 0
        for scene in builtin_scene_suite(sensor=SMALL_SENSOR, frame_count=12):
            attacker = Attacker('X6', scene.sensor)
            for clean, _, truth in run_attack(attacker, scene):
                if attacker.target is None or attacker.commence_frame != clean.index + 1:
                    continue
                selections += 1
                if near_truth(attacker.target.position, truth, 2.0):
                    real += 1
        self.assertGreater(selections, 0)
        self.assertGreaterEqual(real / selections, 0.9)


def near_truth(position, truth, distance):
    return any(math.hypot(box.center[0] - position[0], box.center[1] - position[1]) <= distance for _, box in truth)
