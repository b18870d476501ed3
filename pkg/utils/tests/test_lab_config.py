import json
import tempfile
from pathlib import Path

from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase, override_settings

from utils.csv_utils import format_value, read_rows, write_rows
from utils.exceptions import ConfigError
from utils.lab_config import DEFAULT_CONFIG_FILE, deep_merge, load_lab_config, read_config_file


class LabConfigTests(SimpleTestCase):

    def test_defaults(self):
        lab = load_lab_config()
        self.assertEqual(lab.sensor.channel_count, 32)
        self.assertEqual(lab.sensor.azimuth_count, 1800)
        self.assertEqual(lab.integrity.alpha, lab.sensor.max_points)
        self.assertEqual(lab.fusion.confirm_hits, 3)
        self.assertEqual(lab.attack.kinematics, 'jerk')
        self.assertEqual(lab.attacker_lidar.min_pts, 12)
        self.assertEqual(lab.rss.b_max_brake, 8.0)
        self.assertEqual(lab.metrics.eval_range, 50.0)
        self.assertEqual(lab.net.pacing, 'realtime')
        self.assertEqual(lab.harness.avs, (1, 2, 3, 4))

    def test_overrides_merge(self):
        lab = load_lab_config(overrides={'sensor': {'azimuth_count': 360}, 'attack': {'rho_n': 3.0}})
        self.assertEqual(lab.sensor.azimuth_count, 360)
        self.assertEqual(lab.integrity.alpha, 360 * 32)
        self.assertEqual(lab.attack.rho_n, 3.0)
        self.assertEqual(lab.attack.rho_0, 15.0)

    def test_unknown_override_key(self):
        with self.assertRaisesRegex(ConfigError, 'attack.rho'):
            load_lab_config(overrides={'attack': {'rho': 3.0}})

    def test_config_error_is_improperly_configured(self):
        with self.assertRaises(ImproperlyConfigured):
            load_lab_config(overrides={'rss': {'b_min_brake': 10.0}})

    def test_scene_kwargs(self):
        kwargs = load_lab_config().scene_kwargs()
        self.assertEqual(kwargs['frame_count'], 100)
        self.assertEqual(kwargs['range_noise'], 0.02)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_lab_config('/nonexistent/lab.json')

    def test_unknown_section(self):
        data = json.loads(DEFAULT_CONFIG_FILE.read_text())
        data['radar'] = {}
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'lab.json'
            path.write_text(json.dumps(data))
            with self.assertRaises(ConfigError):
                read_config_file(path)

    def test_settings_point_at_file(self):
        data = json.loads(DEFAULT_CONFIG_FILE.read_text())
        data['metrics']['gate'] = 3.0
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'lab.json'
            path.write_text(json.dumps(data))
            with override_settings(LAB_CONFIG_FILE=str(path)):
                self.assertEqual(load_lab_config().metrics.gate, 3.0)

    def test_deep_merge_leaves_base_alone(self):
        base = {'a': {'b': 1, 'c': 2}}
        merged = deep_merge(base, {'a': {'b': 5}})
        self.assertEqual(merged, {'a': {'b': 5, 'c': 2}})
        self.assertEqual(base, {'a': {'b': 1, 'c': 2}})


class CsvTests(SimpleTestCase):

    def test_value_formatting(self):
        self.assertEqual([format_value(v) for v in (True, False, 0.5, None, 3, 'X1')],
                         ['true', 'false', '0.500000', '', '3', 'X1'])

    def test_write_and_read(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'nested' / 'rows.csv'
            self.assertEqual(write_rows(path, ('frame', 'zeta'), [[0, True], [1, False]]), 2)
            self.assertEqual(read_rows(path), [{'frame': '0', 'zeta': 'true'}, {'frame': '1', 'zeta': 'false'}])
