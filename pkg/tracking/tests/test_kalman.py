import itertools
import math

import numpy as np
from django.test import SimpleTestCase

from sensors.geometry import OrientedBox
from tracking.association import associate, bev_distance_matrix
from tracking.config import FusionConfig
from tracking.kalman import (
    box_innovation, covariance_intersection, kalman_correct, kf_predict, kf_update, lidar_noise, new_track,
)
from utils.exceptions import ConfigError

CFG = FusionConfig()


def make_track(center=(10.0, 0.0, 0.75), velocity=(0.0, 0.0, 0.0), yaw=0.0):
    track = new_track(1, OrientedBox(center, (4.0, 2.0, 1.5), yaw), np.eye(3) * 0.04, CFG, 0.3, 0.2)
    track.x[3:6] = velocity
    return track


def random_pd(rng, n=3):
    a = rng.normal(size=(n, n))
    return a @ a.T + np.eye(n) * 0.1


class KalmanTests(SimpleTestCase):

    def test_predict_still(self):
        track = make_track()
        predicted = kf_predict(track, 0.1, CFG)
        np.testing.assert_allclose(predicted.position, track.position)

    def test_predict_moves_with_velocity(self):
        predicted = kf_predict(make_track(velocity=(10.0, 0.0, 0.0)), 0.1, CFG)
        np.testing.assert_allclose(predicted.position, (11.0, 0.0, 0.75))
        np.testing.assert_allclose(predicted.x[6:], (4.0, 2.0, 1.5, 0.0))

    def test_predict_grows_uncertainty(self):
        track = make_track()
        self.assertGreater(np.trace(kf_predict(track, 0.1, CFG).P), np.trace(track.P))

    def test_predict_rejects_nonpositive_dt(self):
        with self.assertRaises(ValueError):
            kf_predict(make_track(), 0.0, CFG)

    def test_scalar_correction(self):
        x, P = kalman_correct(np.array([0.0]), np.eye(1), np.array([1.0]), np.eye(1), np.eye(1))
        self.assertAlmostEqual(x[0], 0.5)
        self.assertAlmostEqual(P[0, 0], 0.5)

    def test_update_with_predicted_box(self):
        track = make_track()
        updated = kf_update(track, track.box, lidar_noise(CFG))
        np.testing.assert_allclose(updated.x, track.x, atol=1e-12)
        self.assertLess(np.trace(updated.P), np.trace(track.P))

    def test_yaw_innovation_wraps(self):
        track = make_track(yaw=3.1)
        innovation = box_innovation(track.x, OrientedBox((10.0, 0.0, 0.75), (4.0, 2.0, 1.5), -3.1))
        self.assertAlmostEqual(innovation[6], 2 * math.pi - 6.2, places=9)

    def test_non_pd_measurement_noise(self):
        track = make_track()
        with self.assertRaises(ConfigError):
            kf_update(track, track.box, -np.eye(7))

    def test_covariance_stays_pd(self):
        rng = np.random.default_rng(3)
        track = make_track(velocity=(5.0, 0.0, 0.0))
        R = lidar_noise(CFG)
        for _ in range(1000):
            track = kf_predict(track, float(rng.uniform(0.05, 0.2)), CFG)
            if rng.random() < 0.8:
                center = track.position + rng.normal(scale=0.3, size=3)
                dims = np.abs(track.x[6:9] + rng.normal(scale=0.2, size=3)) + 0.1
                track = kf_update(track, OrientedBox(center, dims, rng.uniform(-math.pi, math.pi)), R)
            np.testing.assert_allclose(track.P, track.P.T)
            self.assertGreater(np.linalg.eigvalsh(track.P).min(), 1e-12)


class CovarianceIntersectionTests(SimpleTestCase):

    def test_scalar(self):
        x, P = covariance_intersection(np.array([0.0]), np.eye(1), np.array([4.0]), np.eye(1) * 4.0, 0.5)
        self.assertAlmostEqual(P[0, 0], 1.6, delta=1e-12)
        self.assertAlmostEqual(x[0], 0.8, delta=1e-12)

    def test_consensus_fixed_point(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=4)
        fused, _ = covariance_intersection(x, random_pd(rng, 4), x, random_pd(rng, 4), 0.3)
        np.testing.assert_allclose(fused, x, atol=1e-9)

    def test_loewner_consistency(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            P1, P2 = random_pd(rng), random_pd(rng)
            w = float(rng.uniform(0.05, 0.95))
            _, P = covariance_intersection(np.zeros(3), P1, np.zeros(3), P2, w)
            self.assertGreaterEqual(np.linalg.eigvalsh(P1 / w - P).min(), -1e-9)
            self.assertGreaterEqual(np.linalg.eigvalsh(P2 / (1 - w) - P).min(), -1e-9)

    def test_weight_out_of_range(self):
        with self.assertRaises(ConfigError):
            covariance_intersection(np.zeros(1), np.eye(1), np.zeros(1), np.eye(1), 1.5)
        with self.assertRaises(ConfigError):
            FusionConfig(ci_weight=-0.1)


def brute_force(cost, gate):
    """Maximum number of allowed pairs, then minimum total cost over them."""
    n, m = cost.shape
    best = (0, 0.0)
    if n <= m:
        candidates = ([(r, c) for r, c in enumerate(perm)] for perm in itertools.permutations(range(m), n))
    else:
        candidates = ([(r, c) for c, r in enumerate(perm)] for perm in itertools.permutations(range(n), m))
    for pairs in candidates:
        allowed = [cost[r, c] for r, c in pairs if cost[r, c] <= gate]
        score = (len(allowed), sum(allowed))
        if score[0] > best[0] or (score[0] == best[0] and score[1] < best[1]):
            best = score
    return best


class AssociationTests(SimpleTestCase):

    def test_diagonal(self):
        assignment = associate([[1, 10], [10, 1]], 20)
        self.assertEqual(assignment.pairs, ((0, 0), (1, 1)))
        self.assertEqual(assignment.total_cost([[1, 10], [10, 1]]), 2.0)

    def test_cross_assignment_beats_greedy(self):
        assignment = associate([[1, 2], [2, 100]], 200)
        self.assertEqual(assignment.pairs, ((0, 1), (1, 0)))

    def test_gated_entry_is_dropped(self):
        assignment = associate([[1, 2], [2, 100]], 20)
        self.assertEqual(len(assignment.pairs), 2)
        self.assertEqual(assignment.pairs, ((0, 1), (1, 0)))

    def test_all_above_gate(self):
        assignment = associate([[30, 40], [50, 60]], 20)
        self.assertEqual(assignment.pairs, ())
        self.assertEqual(assignment.unmatched_rows, (0, 1))
        self.assertEqual(assignment.unmatched_cols, (0, 1))

    def test_empty(self):
        assignment = associate(np.zeros((0, 3)), 2.0)
        self.assertEqual(assignment.unmatched_cols, (0, 1, 2))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n, m = rng.integers(1, 7, size=2)
            cost = rng.uniform(0.0, 10.0, size=(n, m))
            assignment = associate(cost, 6.0)
            count, total = brute_force(cost, 6.0)
            self.assertEqual(len(assignment.pairs), count)
            self.assertAlmostEqual(assignment.total_cost(cost), total, places=9)

    def test_bev_distance(self):
        distances = bev_distance_matrix([(0, 0), (3, 4)], [(0, 0)])
        np.testing.assert_allclose(distances, [[0.0], [5.0]])
