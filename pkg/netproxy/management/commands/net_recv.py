"""
Receive the stream, assemble sweeps and check their integrity.
Usage: python manage.py net_recv --out out/live
"""
from django.core.management.base import BaseCommand, CommandError

from netproxy.cli import add_stream_arguments, stream_setup
from netproxy.stream import run_receiver
from utils.exceptions import LabError


class Command(BaseCommand):
    help = 'Assemble received datagrams into sweeps and write sweep files plus integrity.csv'

    def add_arguments(self, parser):
        parser.add_argument('--out', help='Directory for sweep files and integrity.csv')
        parser.add_argument('--max-sweeps', type=int, dest='max_sweeps')
        add_stream_arguments(parser)

    def handle(self, *args, **options):
        try:
            lab, stream = stream_setup(options)
            self.stdout.write(f'Receiving on {stream.host}:{stream.receiver_port}...')
            result = run_receiver(stream, lab.sensor, lab.integrity, out_dir=options['out'],
                                  max_sweeps=options['max_sweeps'])
        except LabError as e:
            raise CommandError(str(e)) from e

        failed = sum(1 for v in result.verdicts if not v.zeta)
        self.stdout.write(f'Assembled {len(result.verdicts)} sweeps')
        if failed:
            self.stdout.write(self.style.WARNING(f'{failed} sweeps failed integrity'))
        else:
            self.stdout.write(self.style.SUCCESS('All sweeps passed integrity'))
