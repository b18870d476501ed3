"""
Celery app for pooled experiment runs.

Workers pick up experiments.tasks.run_condition_task; each task is one
(scene, AV, attack) condition and writes its own result directory.
"""
import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lidar_attack_lab.settings')

app = Celery('lidar_attack_lab')

# CELERY_* keys in the Django settings configure the app
app.config_from_object('django.conf:settings', namespace='CELERY')
app.autodiscover_tasks()
