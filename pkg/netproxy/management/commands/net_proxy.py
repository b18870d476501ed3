"""
Man-in-the-middle attacker between sender and receiver.
Usage: python manage.py net_proxy --attack X1
"""
from django.core.management.base import BaseCommand, CommandError

from attacks.config import ATTACK_CHOICES
from netproxy.cli import add_stream_arguments, stream_setup
from netproxy.stream import run_proxy
from utils.exceptions import LabError


class Command(BaseCommand):
    help = 'Receive sensor datagrams, attack them sweep by sweep and forward to the receiver'

    def add_arguments(self, parser):
        parser.add_argument('--attack', choices=ATTACK_CHOICES, help='Attack to run (baseline forwards unmodified)')
        add_stream_arguments(parser)

    def handle(self, *args, **options):
        try:
            lab, stream = stream_setup(options)
            self.stdout.write(f'Proxy {stream.attack}: {stream.proxy_listen_port} -> {stream.receiver_port}')
            forwarded = run_proxy(stream, lab.sensor, lab.attack)
        except LabError as e:
            raise CommandError(str(e)) from e
        self.stdout.write(self.style.SUCCESS(f'Forwarded {forwarded} packets'))
