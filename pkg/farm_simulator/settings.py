"""
Django settings for the farm_simulator project.

The project has no web surface: Django provides the settings layer, the
app registry, signals, logging configuration, the ``farmsim`` management
command and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-farmsim-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

LOCAL_APPS = [
    'core',
    'topology',
    'engine',
    'workload',
    'routing',
    'lifecycle',
    'metrics',
    'scenarios',
]

INSTALLED_APPS = LOCAL_APPS

# Simulations keep all state in memory; no database is configured.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Simulator defaults. Every value can be overridden from the environment or
# a .env file; the scenario DSL ``defaults`` block overrides these per run.
FARMSIM_DEFAULT_SEED = config('FARMSIM_DEFAULT_SEED', default=0, cast=int)
FARMSIM_DETECT_DELAY_US = config('FARMSIM_DETECT_DELAY_US', default=500_000, cast=int)
FARMSIM_TAKEOVER_TIME_US = config('FARMSIM_TAKEOVER_TIME_US', default=2_000_000, cast=int)
FARMSIM_GEOPLEX_DETECT_US = config('FARMSIM_GEOPLEX_DETECT_US', default=1_000_000, cast=int)
FARMSIM_PROVISION_TIME_US = config('FARMSIM_PROVISION_TIME_US', default=1_000_000, cast=int)
FARMSIM_COPY_RATE_BPS = config('FARMSIM_COPY_RATE_BPS', default=100_000_000, cast=int)
FARMSIM_DEFAULT_KEY_SPACE = config('FARMSIM_DEFAULT_KEY_SPACE', default=65_536, cast=int)
FARMSIM_MAX_ZIPF_KEYS = config('FARMSIM_MAX_ZIPF_KEYS', default=1 << 20, cast=int)
FARMSIM_DEFAULT_BUCKETS = config('FARMSIM_DEFAULT_BUCKETS', default=64, cast=int)
FARMSIM_WINDOW_US = config('FARMSIM_WINDOW_US', default=1_000_000, cast=int)
FARMSIM_SWEEP_WORKERS = config('FARMSIM_SWEEP_WORKERS', default=0, cast=int)

FARMSIM_LOG_LEVEL = config('FARMSIM_LOG_LEVEL', default='INFO')
FARMSIM_LOG_DIR = config('FARMSIM_LOG_DIR', default='')


# Logging configuration for simulation runs
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {process:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': FARMSIM_LOG_LEVEL,
            'propagate': False,
        }
        for app in LOCAL_APPS
    },
}

if FARMSIM_LOG_DIR:
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': Path(FARMSIM_LOG_DIR) / 'farmsim.log',
        'formatter': 'verbose',
    }
    for logger_config in LOGGING['loggers'].values():
        logger_config['handlers'].append('file')
