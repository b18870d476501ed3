"""
Plan execution: every (scene, AV, attack) condition, then increments over
baseline, the summary table and the manifest.

Conditions are independent. The inline executor runs them in this process;
the celery executor fans them out as run_condition_task jobs. Either way each
condition writes its CSVs and the increments are computed from those files.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings

from evaluation.metrics import REPORT_FIELDS, SUMMARY_FIELDS, aggregate_table, increment_over_baseline
from scenes.loader import resolve_scene
from scenes.suite import builtin_scene_suite
from utils.csv_utils import write_rows
from utils.exceptions import ConfigError

from .pipeline import condition_dir, read_frame_metrics, run_condition
from .plan import BASELINE, ExperimentPlan

logger = logging.getLogger(__name__)

EXECUTORS = ('inline', 'celery')
PENDING, RUNNING, COMPLETED, FAILED = 'pending', 'running', 'completed', 'failed'


@dataclass
class PlanResult:
    output_root: Path
    runs: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)

    @property
    def failed(self) -> list:
        return [run for run in self.runs if run['status'] == FAILED]

    @property
    def ok(self) -> bool:
        return not self.failed


def plan_scenes(plan: ExperimentPlan, lab) -> list:
    """
    Resolve every scene up front so a bad reference fails before any run.

    Raises:
        ConfigError: missing scene file, unknown builtin name or duplicate names
    """
    if plan.scenes:
        scenes = [resolve_scene(ref, **lab.scene_kwargs()) for ref in plan.scenes]
    else:
        scenes = builtin_scene_suite(**lab.scene_kwargs())
    names = [scene.name for scene in scenes]
    if len(names) != len(set(names)):
        raise ConfigError(f"Plan scenes must have distinct names, got {names}")
    return scenes


def run_and_write(scene, av: int, attack: str, lab, plan: ExperimentPlan) -> Path:
    result = run_condition(scene, av, attack, lab, seed=plan.seed, frames=plan.frame_count)
    return result.write(condition_dir(plan.output_root, scene.name, av, attack))


def _notify(observer, run):
    if observer is not None:
        observer(**run)


def _execute_inline(plan, lab, scenes, observer):
    runs = []
    for scene in scenes:
        for av in plan.avs:
            for attack in plan.attacks:
                run = {'scene': scene.name, 'av': av, 'attack': attack, 'status': RUNNING}
                _notify(observer, run)
                try:
                    run['metrics'] = str(run_and_write(scene, av, attack, lab, plan))
                    run['status'] = COMPLETED
                except Exception as e:
                    logger.error(f"Run {scene.name}/av{av}/{attack} failed: {str(e)}", exc_info=True)
                    run.update(status=FAILED, error=str(e))
                _notify(observer, run)
                runs.append(run)
    return runs


def _execute_celery(plan, scenes, refs, observer):
    from celery import group

    from .tasks import run_condition_task

    keys = [(scene.name, ref, av, attack) for scene, ref in zip(scenes, refs)
            for av in plan.avs for attack in plan.attacks]
    for name, _, av, attack in keys:
        _notify(observer, {'scene': name, 'av': av, 'attack': attack, 'status': RUNNING})
    job = group(run_condition_task.s(plan.to_dict(), ref, av, attack) for _, ref, av, attack in keys)
    outcomes = job.apply_async().get(propagate=False)

    runs = []
    for (name, _, av, attack), outcome in zip(keys, outcomes):
        run = {'scene': name, 'av': av, 'attack': attack}
        if isinstance(outcome, Exception):
            run.update(status=FAILED, error=str(outcome))
        else:
            run.update(status=COMPLETED, metrics=outcome)
        _notify(observer, run)
        runs.append(run)
    return runs


def compute_reports(runs, include_baseline=False) -> dict:
    """
    IncrementReport per completed (av, attack, scene) with a completed baseline.

    include_baseline adds the (all-zero) baseline-against-itself reports, used
    when a plan has no attacks so its summary still has a row per AV.
    """
    done = {(r['scene'], r['av'], r['attack']): r['metrics'] for r in runs if r['status'] == COMPLETED}
    reports = {}
    for (scene, av, attack), path in sorted(done.items()):
        if (attack == BASELINE and not include_baseline) or (scene, av, BASELINE) not in done:
            continue
        baseline = read_frame_metrics(done[(scene, av, BASELINE)])
        reports[(av, attack, scene)] = increment_over_baseline(read_frame_metrics(path), baseline)
    return reports


def write_outputs(plan: ExperimentPlan, result: PlanResult):
    root = result.output_root
    report_rows = [[scene, av, attack, *report.as_dict().values()]
                   for (av, attack, scene), report in sorted(result.reports.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1]))]
    write_rows(root / 'reports.csv', REPORT_FIELDS, report_rows)
    write_rows(root / 'summary.csv', SUMMARY_FIELDS, [row.as_row() for row in result.summary])

    manifest = {
        'plan': plan.to_dict(),
        'runs': [{
            'scene': run['scene'],
            'av': run['av'],
            'attack': run['attack'],
            'status': run['status'],
            'dir': str(condition_dir('.', run['scene'], run['av'], run['attack'])),
        } for run in result.runs],
        'reports': 'reports.csv',
        'summary': 'summary.csv',
    }
    (root / 'manifest.json').write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n')


def run_plan(plan: ExperimentPlan, executor=None, observer=None) -> PlanResult:
    """
    Run a plan and write its result tree.

    Args:
        plan: ExperimentPlan
        executor: 'inline' or 'celery'; defaults to settings.LAB_EXECUTOR
        observer: Optional callable(scene, av, attack, status, **extra) told
            about every status change

    Returns:
        PlanResult; result.ok is False when any run failed

    Raises:
        ConfigError: invalid plan, configuration or scene reference
    """
    executor = executor or getattr(settings, 'LAB_EXECUTOR', 'inline')
    if executor not in EXECUTORS:
        raise ConfigError(f"Unknown executor '{executor}' (choose from {EXECUTORS})")
    lab = plan.lab_config()
    scenes = plan_scenes(plan, lab)
    refs = list(plan.scenes) or [scene.name for scene in scenes]
    root = plan.output_root
    root.mkdir(parents=True, exist_ok=True)
    logger.info(f"Running plan: {len(scenes)} scenes x {len(plan.avs)} AVs x {len(plan.attacks)} conditions "
                f"({executor}) into {root}")

    if executor == 'celery':
        runs = _execute_celery(plan, scenes, refs, observer)
    else:
        runs = _execute_inline(plan, lab, scenes, observer)

    result = PlanResult(output_root=root, runs=runs)
    result.reports = compute_reports(runs, include_baseline=not plan.attacked)
    result.summary = aggregate_table(result.reports, attack_order=plan.attacks)
    write_outputs(plan, result)
    logger.info(f"Plan finished: {len(runs) - len(result.failed)}/{len(runs)} runs completed, "
                f"{len(result.summary)} summary cells")
    return result
