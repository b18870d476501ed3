"""
Django settings for the lidar_attack_lab project.
Partial-information LiDAR datagram attacks against sensor-fusion AV designs.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-lidar-attack-lab-local-only')

DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1').split(',')


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',

    # Local apps
    'sensors.apps.SensorsConfig',
    'scenes.apps.ScenesConfig',
    'perception.apps.PerceptionConfig',
    'tracking.apps.TrackingConfig',
    'attacks.apps.AttacksConfig',
    'safety.apps.SafetyConfig',
    'evaluation.apps.EvaluationConfig',
    'netproxy.apps.NetproxyConfig',
    'experiments.apps.ExperimentsConfig',
]


# Database
# https://docs.djangoproject.com/en/5.0/ref/settings/#databases

DB_ENGINE = config('DB_ENGINE', default='django.db.backends.sqlite3')

if 'postgresql' in DB_ENGINE:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.postgresql',
            'NAME': config('DB_NAME', default='lidar_attack_lab'),
            'USER': config('DB_USER', default='postgres'),
            'PASSWORD': config('DB_PASSWORD', default=''),
            'HOST': config('DB_HOST', default='localhost'),
            'PORT': config('DB_PORT', default='5432'),
        }
    }
else:
    # SQLite for local runs
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / config('DB_NAME', default='db.sqlite3'),
        }
    }


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Celery Configuration
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=False, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True


# Experiment configuration
# One structured file with a section per module; plans may override any key.
LAB_CONFIG_FILE = config('LAB_CONFIG_FILE', default=str(BASE_DIR / 'config' / 'lab_defaults.json'))

# Root for out/{scene}/{av}/{attack}/... result trees
LAB_OUTPUT_ROOT = config('LAB_OUTPUT_ROOT', default=str(BASE_DIR / 'out'))

# 'inline' runs conditions in-process; 'celery' fans them out to workers
LAB_EXECUTOR = config('LAB_EXECUTOR', default='inline')

LAB_LOG_FILE = config('LAB_LOG_FILE', default=str(BASE_DIR / 'lab.log'))


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
        'file': {
            'level': 'DEBUG',
            'class': 'logging.FileHandler',
            'filename': LAB_LOG_FILE,
            'formatter': 'verbose',
            'delay': True,
        },
    },
    'loggers': {
        app: {
            'handlers': ['console', 'file'],
            'level': config('LAB_LOG_LEVEL', default='INFO'),
            'propagate': False,
        }
        for app in (
            'sensors', 'scenes', 'perception', 'tracking', 'attacks',
            'safety', 'evaluation', 'netproxy', 'experiments', 'utils',
        )
    },
}
