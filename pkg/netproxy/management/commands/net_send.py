"""
Stream a scene as sensor datagrams to the proxy.
Usage: python manage.py net_send lead_0 --frames 50
"""
from django.core.management.base import BaseCommand, CommandError

from netproxy.cli import add_stream_arguments, stream_setup
from netproxy.stream import PACING_CHOICES, run_sender
from scenes.loader import resolve_scene
from utils.exceptions import LabError


class Command(BaseCommand):
    help = 'Send a rendered scene over UDP, paced like the sensor'

    def add_arguments(self, parser):
        parser.add_argument('scene', help='Scene file (.json) or builtin scene name')
        parser.add_argument('--frames', type=int, help='Only send the first N sweeps')
        parser.add_argument('--pacing', choices=PACING_CHOICES)
        add_stream_arguments(parser)

    def handle(self, *args, **options):
        try:
            lab, stream = stream_setup(options)
            scene = resolve_scene(options['scene'], **lab.scene_kwargs())
            self.stdout.write(f'Sending {scene.name} to {stream.host}:{stream.proxy_listen_port} ({stream.pacing})...')
            sent = run_sender(scene, stream, frames=options['frames'])
        except LabError as e:
            raise CommandError(str(e)) from e
        self.stdout.write(self.style.SUCCESS(f'Sent {sent} packets'))
