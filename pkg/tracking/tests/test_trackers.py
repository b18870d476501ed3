import math

import numpy as np
from django.test import SimpleTestCase
from scipy.stats import chi2

from perception.detections import BoxDetection
from sensors.camera import CameraModel, CameraView
from sensors.geometry import OrientedBox, Pose
from tracking.config import FusionConfig
from tracking.trackers import (
    AsymmetryMonitorTracker, CentralFusionTracker, T2TFusionTracker, TrackManager, build_tracker,
    detection_to_world, fuse_t2t, range_consistent, step_av1,
)

CFG = FusionConfig()
DT = 0.1
VIEW = CameraView(CameraModel(), Pose((0.0, 0.0, 1.7), 0.0))


def lidar_det(x, y):
    return BoxDetection('lidar', 0.9, box=OrientedBox((x, y, 0.75), (4.0, 2.0, 1.5), 0.0))


def camera3d_det(x, y):
    return BoxDetection('camera3d', 0.9, box=OrientedBox((x, y, 0.75), (4.0, 2.0, 1.5), 0.0),
                        covariance=np.eye(3) * 0.25)


def camera2d_det(x, y):
    (u, v), _ = VIEW.project_world((x, y, 0.75))
    return BoxDetection('camera2d', 0.9, box2d=(u - 30.0, v - 20.0, u + 30.0, v + 20.0))


def first_confirmed_frame(tracker, frames):
    for k, (lidar, camera) in enumerate(frames):
        if tracker.step(lidar, camera, DT, VIEW):
            return k
    return None


class DetectionFrameTests(SimpleTestCase):

    def test_detection_to_world(self):
        det = BoxDetection('camera3d', 0.5, box=OrientedBox((10.0, 0.0, -0.95), (4.0, 2.0, 1.5), 0.0),
                           covariance=np.diag([4.0, 1.0, 1.0]))
        world = detection_to_world(det, Pose((5.0, 5.0, 1.7), math.pi / 2))
        np.testing.assert_allclose(world.center, (5.0, 15.0, 0.75), atol=1e-12)
        self.assertAlmostEqual(world.box.yaw, math.pi / 2)
        np.testing.assert_allclose(np.diag(world.covariance), (1.0, 4.0, 1.0), atol=1e-12)


class LidarTrackerTests(SimpleTestCase):

    def test_constant_velocity_object(self):
        tracker = TrackManager(CFG)
        for k in range(20):
            tracks, tracker = step_av1(tracker, [lidar_det(10.0 + k, 2.0)], DT)
        self.assertEqual(len(tracks), 1)
        error = np.hypot(tracks[0].position[0] - 29.0, tracks[0].position[1] - 2.0)
        self.assertLessEqual(error, 0.3)
        self.assertAlmostEqual(tracks[0].velocity[0], 10.0, delta=1.0)

    def test_spurious_detection_never_confirmed(self):
        tracker = TrackManager(CFG)
        self.assertEqual(tracker.step([lidar_det(20.0, 0.0)], DT), [])
        for _ in range(10):
            self.assertEqual(tracker.step([], DT), [])
        self.assertEqual(tracker.tracks, [])

    def test_confirmed_at_third_hit(self):
        tracker = TrackManager(CFG)
        outputs = [tracker.step([lidar_det(20.0, 0.0)], DT) for _ in range(3)]
        self.assertEqual([len(o) for o in outputs], [0, 0, 1])

    def test_deleted_after_misses(self):
        tracker = TrackManager(CFG)
        for _ in range(5):
            tracker.step([lidar_det(20.0, 0.0)], DT)
        alive = []
        for _ in range(CFG.delete_misses):
            tracker.step([], DT)
            alive.append(len(tracker.tracks))
        self.assertEqual(alive, [1] * (CFG.delete_misses - 1) + [0])

    def test_replay_is_deterministic(self):
        def run():
            tracker = TrackManager(CFG)
            ids = []
            for k in range(15):
                dets = [lidar_det(10.0 + 0.5 * k, 0.0), lidar_det(30.0, -4.0 + 0.1 * k)]
                if k % 4 == 0:
                    dets.append(lidar_det(50.0, 20.0))
                ids.append([t.id for t in tracker.step(dets, DT)])
            return ids
        self.assertEqual(run(), run())

    def test_unknown_design(self):
        with self.assertRaises(ValueError):
            build_tracker(5, CFG)


class CentralFusionTests(SimpleTestCase):

    def test_camera_confirms_earlier(self):
        fused = first_confirmed_frame(CentralFusionTracker(CFG), [([lidar_det(20.0, 0.0)], [camera2d_det(20.0, 0.0)])] * 5)
        lidar_only = first_confirmed_frame(CentralFusionTracker(CFG), [([lidar_det(20.0, 0.0)], [])] * 5)
        self.assertIsNotNone(fused)
        self.assertLessEqual(fused + 1, lidar_only)

    def test_object_outside_camera_view_still_confirmed(self):
        frame = first_confirmed_frame(CentralFusionTracker(CFG), [([lidar_det(-20.0, 0.0)], [])] * 5)
        self.assertEqual(frame, CFG.confirm_hits - 1)

    def test_camera_box_alone_never_spawns(self):
        tracker = CentralFusionTracker(CFG)
        for _ in range(10):
            tracker.step([], [camera2d_det(20.0, 0.0)], DT, VIEW)
        self.assertEqual(tracker.tracks, [])

    def test_camera_match_counts(self):
        tracker = CentralFusionTracker(CFG)
        tracker.step([lidar_det(20.0, 0.0)], [camera2d_det(20.0, 0.0)], DT, VIEW)
        (track,) = tracker.tracks
        self.assertEqual((track.hits_lidar, track.hits_camera), (1, 1))

    def test_uncorroborated_track_kept_in_view(self):
        tracker = CentralFusionTracker(CFG)
        counts = [len(tracker.step([lidar_det(20.0, 0.0)], [], DT, VIEW)) for _ in range(30)]
        self.assertTrue(all(c == 1 for c in counts[CFG.confirm_hits - 1:]))


class AsymmetryMonitorTests(SimpleTestCase):

    def run_frames(self, frames):
        tracker = AsymmetryMonitorTracker(CFG)
        return [len(tracker.step(lidar, camera, DT, VIEW)) for lidar, camera in frames]

    def test_lidar_only_phantom_deleted(self):
        counts = self.run_frames([([lidar_det(20.0, 0.0)], [])] * 20)
        # one window entry per frame from spawn; dropped on the tenth frame
        last_alive = CFG.asymmetry_window_len - 2
        self.assertEqual(counts[last_alive], 1)
        self.assertEqual(counts[last_alive + 1], 0)
        self.assertEqual(counts.index(0, CFG.confirm_hits), 9)

    def test_corroborated_object_survives(self):
        frames = [([lidar_det(20.0, 0.0)], [] if k % 10 == 5 else [camera2d_det(20.0, 0.0)]) for k in range(30)]
        counts = self.run_frames(frames)
        self.assertTrue(all(c == 1 for c in counts[1:]))

    def test_phantom_outside_view_exempt(self):
        counts = self.run_frames([([lidar_det(-20.0, 0.0)], [])] * 30)
        self.assertEqual(counts[-1], 1)


class TrackToTrackFusionTests(SimpleTestCase):

    def run_frames(self, lidar, camera, frames=6):
        tracker = T2TFusionTracker(CFG)
        for _ in range(frames):
            output = tracker.step(lidar, camera, DT, VIEW)
        return tracker, output

    def test_matched_pair_fused(self):
        _, output = self.run_frames([lidar_det(20.0, 1.0)], [camera3d_det(20.3, 1.0)])
        self.assertEqual(len(output), 1)
        self.assertEqual(output[0].source, 'fused')
        self.assertTrue(19.99 < output[0].position[0] < 20.31)

    def test_lidar_phantom_in_view_suppressed(self):
        tracker, output = self.run_frames([lidar_det(20.0, 0.0)], [])
        self.assertEqual(output, [])
        self.assertEqual(len(tracker.suppressed), 1)

    def test_lidar_track_outside_view_passes(self):
        _, output = self.run_frames([lidar_det(-20.0, 0.0)], [])
        self.assertEqual(len(output), 1)
        self.assertEqual(output[0].source, 'lidar')

    def test_camera_only_track_suppressed(self):
        _, output = self.run_frames([], [camera3d_det(25.0, 0.0)])
        self.assertEqual(output, [])

    def test_fuse_ignores_tentative_tracks(self):
        lidar = TrackManager(CFG)
        lidar.step([lidar_det(20.0, 0.0)], DT)
        self.assertEqual(fuse_t2t(lidar.tracks, [], CFG, VIEW), [])

    def test_range_drift_breaks_pair(self):
        tracker, output = self.run_frames([lidar_det(25.0, 0.0)], [camera3d_det(25.0, 0.0)], frames=12)
        self.assertEqual([t.source for t in output], ['fused'])
        # lidar returns dragged 1.8 m along the ray, still inside the BEV gate
        for _ in range(4):
            output = tracker.step([lidar_det(23.2, 0.0)], [camera3d_det(25.0, 0.0)], DT, VIEW)
        lidar_track, camera_track = tracker.lidar.output()[0], tracker.camera.output()[0]
        self.assertLess(np.hypot(*(lidar_track.position[:2] - camera_track.position[:2])), CFG.t2t_gate)
        self.assertEqual(output, [])
        self.assertEqual(sorted(t.source for t in tracker.suppressed), ['camera3d', 'lidar'])

    def test_cross_range_offset_still_fuses(self):
        _, output = self.run_frames([lidar_det(25.0, 0.8)], [camera3d_det(25.0, 0.0)], frames=8)
        self.assertEqual([t.source for t in output], ['fused'])

    def test_range_consistency_uses_line_of_sight(self):
        lidar, camera = TrackManager(CFG), TrackManager(CFG, source='camera3d')
        for _ in range(8):
            lidar.step([lidar_det(30.0, 0.0)], DT)
            camera.step([camera3d_det(30.0, 0.0)], DT)
        threshold = chi2.ppf(CFG.t2t_consistency_prob, df=2)
        self.assertTrue(range_consistent(lidar.output()[0], camera.output()[0], (0.0, 0.0), threshold))
        shifted = lidar.output()[0].copy()
        shifted.x[0] -= 2.0
        self.assertFalse(range_consistent(shifted, camera.output()[0], (0.0, 0.0), threshold))
        shifted = lidar.output()[0].copy()
        shifted.x[1] += 1.0
        self.assertTrue(range_consistent(shifted, camera.output()[0], (0.0, 0.0), threshold))
