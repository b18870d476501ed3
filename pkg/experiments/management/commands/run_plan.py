"""
Run an experiment plan and write the result tree.
Usage: python manage.py run_plan plans/quick.json
       python manage.py run_plan --scenes lead_0 --avs 1 4 --attacks X1 --frames 60
"""
from django.core.management.base import BaseCommand, CommandError

from attacks.config import ATTACK_CHOICES
from experiments.plan import ExperimentPlan, load_plan
from experiments.plots import emit_plots
from experiments.registry import RunRecorder
from experiments.runner import EXECUTORS, run_plan
from utils.exceptions import LabError
from utils.lab_config import AV_CHOICES


class Command(BaseCommand):
    help = 'Run every (scene, AV, attack) condition of a plan and report increments over baseline'

    def add_arguments(self, parser):
        parser.add_argument('plan', nargs='?', help='JSON plan file; omitted means the harness defaults')
        parser.add_argument('--scenes', nargs='+', help='Scene files or builtin scene names')
        parser.add_argument('--avs', nargs='+', type=int, choices=AV_CHOICES)
        parser.add_argument('--attacks', nargs='+', choices=ATTACK_CHOICES)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--frames', type=int, help='Frames per scene')
        parser.add_argument('--out', help='Output root (defaults to LAB_OUTPUT_ROOT)')
        parser.add_argument('--executor', choices=EXECUTORS, help='Defaults to LAB_EXECUTOR')
        parser.add_argument('--no-record', action='store_true', help='Do not record runs in the database')
        parser.add_argument('--plots', action='store_true', help='Also write SVG plots of the summary')

    def handle(self, *args, **options):
        try:
            plan = self.build_plan(options)
            recorder = None if options['no_record'] else RunRecorder(plan.output_root)
            self.stdout.write(f'Running plan into {plan.output_root}...')
            result = run_plan(plan, executor=options['executor'], observer=recorder)
            if recorder is not None:
                recorder.attach_reports(result.reports)
        except LabError as e:
            raise CommandError(str(e)) from e

        for row in result.summary:
            self.stdout.write(f'  AV.{row.av} {row.attack}: ft_inc={row.ft_inc:.3f} mt_inc={row.mt_inc:.3f} '
                              f'unsafe={row.unsafe_fraction:.2f}')
        if options['plots']:
            for path in emit_plots(result.summary, plan.output_root / 'plots'):
                self.stdout.write(f'  📈 {path}')

        if not result.ok:
            for run in result.failed:
                self.stdout.write(self.style.ERROR(f"  ✗ {run['scene']}/av{run['av']}/{run['attack']}: {run['error']}"))
            raise CommandError(f'{len(result.failed)} of {len(result.runs)} runs failed')
        self.stdout.write(self.style.SUCCESS(f'\n✅ Completed {len(result.runs)} runs'))

    def build_plan(self, options):
        overrides = {name: options[name] for name in ('scenes', 'avs', 'attacks', 'seed') if options.get(name) is not None}
        if options.get('frames') is not None:
            overrides['frame_count'] = options['frames']
        if options.get('out'):
            overrides['output_dir'] = options['out']
        if options.get('plan'):
            return ExperimentPlan.from_dict({**load_plan(options['plan']).to_dict(), **overrides})
        return ExperimentPlan.from_defaults(**overrides)
