"""
Render the summary table as grouped bar charts.
Usage: python manage.py plot_summary out/summary.csv --out out/plots
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from experiments.plots import emit_plots, read_summary


class Command(BaseCommand):
    help = 'Write ft_inc, mt_inc and unsafe_fraction SVG plots from a summary.csv'

    def add_arguments(self, parser):
        parser.add_argument('summary', help='summary.csv written by run_plan')
        parser.add_argument('--out', help='Directory for the SVGs (defaults to the summary directory)')

    def handle(self, *args, **options):
        summary = Path(options['summary'])
        if not summary.exists():
            raise CommandError(f'Summary not found: {summary}')
        paths = emit_plots(read_summary(summary), options['out'] or summary.parent)
        if not paths:
            self.stdout.write(self.style.WARNING('Summary is empty, nothing to plot'))
            return
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(paths)} plots'))
