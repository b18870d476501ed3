"""
Settings for batch experiment workers sharing one PostgreSQL run registry.

Usage:
    DJANGO_SETTINGS_MODULE=lidar_attack_lab.settings_production
"""
from .settings import *  # noqa: F401,F403
from decouple import config

DEBUG = False

SECRET_KEY = config('SECRET_KEY')

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.postgresql',
        'NAME': config('DB_NAME', default='lidar_attack_lab'),
        'USER': config('DB_USER'),
        'PASSWORD': config('DB_PASSWORD'),
        'HOST': config('DB_HOST', default='localhost'),
        'PORT': config('DB_PORT', default='5432'),
        'CONN_MAX_AGE': 600,
    }
}

# Workers: one CPU-bound condition per process. A condition rewrites its own
# directory byte-identically, so a task lost with its worker is simply re-run.
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='redis://localhost:6379/0')
CELERY_TASK_ALWAYS_EAGER = False
CELERY_BROKER_CONNECTION_RETRY_ON_STARTUP = True
CELERY_WORKER_PREFETCH_MULTIPLIER = 1
CELERY_TASK_ACKS_LATE = True
CELERY_TASK_REJECT_ON_WORKER_LOST = True
CELERY_TASK_TIME_LIMIT = config('LAB_CONDITION_TIME_LIMIT', default=3600, cast=int)

LAB_EXECUTOR = config('LAB_EXECUTOR', default='celery')
# Must be a path every worker can write to
LAB_OUTPUT_ROOT = config('LAB_OUTPUT_ROOT')
LAB_LOG_FILE = config('LAB_LOG_FILE', default='/var/log/lidar_attack_lab/lab.log')
LOGGING['handlers']['file']['filename'] = LAB_LOG_FILE  # noqa: F405

SENTRY_DSN = config('SENTRY_DSN', default='')

if SENTRY_DSN:
    import sentry_sdk
    from sentry_sdk.integrations.celery import CeleryIntegration
    from sentry_sdk.integrations.django import DjangoIntegration

    sentry_sdk.init(
        dsn=SENTRY_DSN,
        integrations=[DjangoIntegration(), CeleryIntegration()],
        traces_sample_rate=0.0,
        send_default_pii=False,
        environment=config('SENTRY_ENVIRONMENT', default='production'),
    )
