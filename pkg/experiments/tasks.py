"""
Celery tasks for pooled experiment runs.
"""
import logging

from celery import shared_task

logger = logging.getLogger(__name__)


@shared_task
def run_condition_task(plan_data, scene_ref, av, attack):
    """
    Run one (scene, AV, attack) condition on a worker.

    Args:
        plan_data: ExperimentPlan.to_dict()
        scene_ref: Scene file path or builtin scene name
        av: Victim design 1..4
        attack: Attack name

    Returns:
        str: path of the condition's metrics.csv
    """
    try:
        from scenes.loader import resolve_scene

        from .plan import ExperimentPlan
        from .runner import run_and_write

        plan = ExperimentPlan.from_dict(plan_data)
        lab = plan.lab_config()
        scene = resolve_scene(scene_ref, **lab.scene_kwargs())
        path = run_and_write(scene, int(av), attack, lab, plan)
        logger.info(f"Worker finished {scene.name}/av{av}/{attack}")
        return str(path)

    except Exception as e:
        logger.error(f"Error running {scene_ref}/av{av}/{attack}: {str(e)}", exc_info=True)
        raise
