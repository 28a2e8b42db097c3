"""Configure Django for pytest, as run_backend_tests.setup_django does."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'test_settings')
django.setup()
