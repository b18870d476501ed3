"""
Database bookkeeping for plan runs; the runner itself never touches the ORM.
"""
import logging

from .models import ExperimentRun

logger = logging.getLogger(__name__)


class RunRecorder:
    """Runner observer that mirrors every status change into ExperimentRun rows."""

    def __init__(self, output_root):
        self.output_root = str(output_root)

    def __call__(self, scene, av, attack, status, metrics='', error='', **extra):
        ExperimentRun.objects.update_or_create(
            output_root=self.output_root,
            scene=scene,
            av=av,
            attack=attack,
            defaults={'status': status, 'metrics_path': metrics or '', 'error': error or ''},
        )

    def attach_reports(self, reports):
        """Store increment reports on their runs; reports is {(av, attack, scene): IncrementReport}."""
        updated = 0
        for (av, attack, scene), report in reports.items():
            run = ExperimentRun.objects.filter(output_root=self.output_root, scene=scene, av=av, attack=attack).first()
            if run is None:
                logger.warning(f"No run row for {scene}/av{av}/{attack}; report not stored")
                continue
            run.apply_report(report)
            run.save()
            updated += 1
        return updated
