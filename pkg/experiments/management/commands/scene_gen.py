"""
Write the builtin scene suite to disk as scene files.
Usage: python manage.py scene_gen --out scenes_out
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from scenes.loader import dump_scene
from scenes.suite import builtin_scene_suite
from utils.exceptions import LabError
from utils.lab_config import load_lab_config


class Command(BaseCommand):
    help = 'Emit the builtin scene suite as JSON scene files'

    def add_arguments(self, parser):
        parser.add_argument('--out', default='scenes_out', help='Destination directory')
        parser.add_argument('--frames', type=int, help='Frames per scene')
        parser.add_argument('--config', help='Lab configuration file')

    def handle(self, *args, **options):
        try:
            kwargs = load_lab_config(options['config']).scene_kwargs()
        except LabError as e:
            raise CommandError(str(e)) from e
        if options['frames'] is not None:
            kwargs['frame_count'] = options['frames']

        out = Path(options['out'])
        scenes = builtin_scene_suite(**kwargs)
        for scene in scenes:
            path = dump_scene(scene, out / f'{scene.name}.json')
            self.stdout.write(f'  {path}')
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(scenes)} scenes to {out}'))
