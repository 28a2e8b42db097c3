#!/usr/bin/env python
"""
Test runner for the server-farm simulator.
Runs the per-app unit tests, the end-to-end acceptance checks and the slow scale checks.
"""
import os
import sys
import django
from django.conf import settings
from django.test.utils import get_runner


UNIT_LABELS = [
    'core.tests',
    'topology.tests',
    'engine.tests',
    'workload.tests',
    'routing.tests',
    'lifecycle.tests',
    'metrics.tests',
    'scenarios.tests',
]


def setup_django():
    """Set up Django environment for testing."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'test_settings')
    django.setup()


def run_test_suite(test_labels=None, verbosity=2, interactive=False, tags=None, exclude_tags=None):
    """
    Run the simulator test suite.

    Args:
        test_labels: List of specific test labels to run (optional)
        verbosity: Test output verbosity level (0-3)
        interactive: Whether to run tests interactively
        tags: Only run tests with these tags
        exclude_tags: Skip tests with these tags

    Returns:
        Number of test failures
    """
    setup_django()

    TestRunner = get_runner(settings)
    test_runner = TestRunner(
        verbosity=verbosity, interactive=interactive, tags=tags, exclude_tags=exclude_tags,
    )

    if test_labels is None:
        test_labels = UNIT_LABELS + ['core.test_acceptance']

    print("=" * 70)
    print("RUNNING FARM SIMULATOR TEST SUITE")
    print("=" * 70)
    print(f"Test labels: {', '.join(test_labels)}")
    print(f"Verbosity: {verbosity}")
    print("=" * 70)

    failures = test_runner.run_tests(test_labels)

    print("=" * 70)
    if failures:
        print(f"TESTS COMPLETED WITH {failures} FAILURES")
    else:
        print("ALL TESTS PASSED SUCCESSFULLY!")
    print("=" * 70)

    return failures


def run_specific_test_category(category):
    """
    Run a specific category of tests.

    Args:
        category: Test category ('unit', 'acceptance', 'performance', 'all')

    Returns:
        Number of test failures
    """
    category_mapping = {
        'unit': UNIT_LABELS,
        'acceptance': ['core.test_acceptance'],
        'performance': ['core.tests_performance'],
        'all': None,
    }

    if category not in category_mapping:
        print(f"Unknown test category: {category}")
        print(f"Available categories: {', '.join(category_mapping.keys())}")
        return 1

    if category == 'performance':
        return run_test_suite(category_mapping[category], tags=['slow'])
    return run_test_suite(category_mapping[category], exclude_tags=['slow'])


def main():
    """Main entry point for the test runner."""
    if len(sys.argv) < 2:
        print("Usage:")
        print("  python run_backend_tests.py <command>")
        print("")
        print("Commands:")
        print("  all                   - Run unit and acceptance tests")
        print("  unit                  - Run the per-app unit tests only")
        print("  acceptance            - Run the end-to-end acceptance checks only")
        print("  performance           - Run the slow scale checks")
        print("")
        print("Examples:")
        print("  python run_backend_tests.py all")
        print("  python run_backend_tests.py performance")
        return 1

    return run_specific_test_category(sys.argv[1])


if __name__ == '__main__':
    sys.exit(main())
