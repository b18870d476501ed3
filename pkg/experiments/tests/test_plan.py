import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from experiments.plan import BASELINE, ExperimentPlan, load_plan
from utils.exceptions import ConfigError


class ExperimentPlanTests(SimpleTestCase):

    def test_baseline_always_included(self):
        plan = ExperimentPlan(avs=(1,), attacks=('X4', 'X1'))
        self.assertEqual(plan.attacks, (BASELINE, 'X1', 'X4'))
        self.assertEqual(plan.attacked, ('X1', 'X4'))

    def test_baseline_only(self):
        plan = ExperimentPlan(avs=(2,), attacks=())
        self.assertEqual(plan.attacks, (BASELINE,))
        self.assertEqual(plan.attacked, ())

    def test_unknown_attack(self):
        with self.assertRaises(ConfigError):
            ExperimentPlan(attacks=('X2',))

    def test_unknown_av(self):
        with self.assertRaises(ConfigError):
            ExperimentPlan(avs=(5,))
        with self.assertRaises(ConfigError):
            ExperimentPlan(avs=())

    def test_dict_round_trip(self):
        plan = ExperimentPlan(scenes=('lead_0',), avs=(4, 1), attacks=('X7',), seed=3, frame_count=20,
                              overrides={'attack': {'rho_n': 2.0}})
        self.assertEqual(ExperimentPlan.from_dict(json.loads(json.dumps(plan.to_dict()))), plan)

    def test_unknown_plan_key(self):
        with self.assertRaises(ConfigError):
            ExperimentPlan.from_dict({'scene': ['lead_0']})

    def test_load_plan(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'plan.json'
            path.write_text(json.dumps({'scenes': ['empty_road_0'], 'avs': [1], 'attacks': ['X1']}))
            plan = load_plan(path)
        self.assertEqual(plan.scenes, ('empty_road_0',))
        self.assertEqual(plan.attacks, (BASELINE, 'X1'))

    def test_missing_plan_file(self):
        with self.assertRaises(ConfigError):
            load_plan('/nonexistent/plan.json')

    def test_overrides_reach_lab_config(self):
        plan = ExperimentPlan(frame_count=12, overrides={'attack': {'rho_n': 2.0}})
        lab = plan.lab_config()
        self.assertEqual(lab.scene.frame_count, 12)
        self.assertEqual(lab.attack.rho_n, 2.0)

    def test_unknown_override_key(self):
        with self.assertRaises(ConfigError):
            ExperimentPlan(overrides={'attack': {'rho_zero': 2.0}}).lab_config()
