"""
Test-specific Django settings for the simulator test suite.
Keeps the defaults deterministic and silences log output.
"""
from decouple import config

from farm_simulator.settings import *

# Test-specific settings
DEBUG = False
TESTING = True

# Pin the simulator defaults so tests do not depend on the environment
FARMSIM_DEFAULT_SEED = 0
FARMSIM_DETECT_DELAY_US = 500_000
FARMSIM_TAKEOVER_TIME_US = 2_000_000
FARMSIM_GEOPLEX_DETECT_US = 1_000_000
FARMSIM_PROVISION_TIME_US = 1_000_000
FARMSIM_COPY_RATE_BPS = 100_000_000
FARMSIM_DEFAULT_KEY_SPACE = 65_536
FARMSIM_DEFAULT_BUCKETS = 64
FARMSIM_WINDOW_US = 1_000_000
FARMSIM_SWEEP_WORKERS = 2

# Wall-clock budgets of the slow scale checks are multiplied by this factor
FARMSIM_PERF_SLOWDOWN = config('FARMSIM_PERF_SLOWDOWN', default=1.0, cast=float)

# Disable logging during tests to reduce noise
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'handlers': {
        'null': {
            'class': 'logging.NullHandler',
        },
    },
    'root': {
        'handlers': ['null'],
    },
    'loggers': {
        app: {'handlers': ['null'], 'propagate': False}
        for app in LOCAL_APPS
    },
}

SECRET_KEY = 'test-secret-key-not-for-production'

# Test runner configuration
TEST_RUNNER = 'django.test.runner.DiscoverRunner'
