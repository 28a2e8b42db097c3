"""
Scale checks for the simulator.

Tagged ``slow``; run them with ``python run_backend_tests.py performance``
or ``python manage.py test --tag slow``.

The wall-clock budgets are set for a desktop-class reference machine: one
x86-64 core at 3 GHz or faster running CPython 3.11 or later. On a slower
host, set ``FARMSIM_PERF_SLOWDOWN`` to how many times slower it is; every
budget is scaled by that factor.
"""
import time

from django.conf import settings
from django.test import SimpleTestCase, tag

from metrics.statistics import availability
from scenarios.loader import load_scenario
from scenarios.parser import BUNDLED, parse_scenario
from scenarios.runner import run_loaded

ONE_HOUR_US = 3_600_000_000
ONE_HOUR_BUDGET_S = 60.0
MIN_REQUESTS_PER_S = 60_000


@tag('slow')
class FarmScaleTestCase(SimpleTestCase):
    """Test run time of the bundled four-site farm."""

    def setUp(self):
        """Load the four-site, 150-node scenario."""
        self.loaded = load_scenario(parse_scenario((BUNDLED / 'msft1997.farm').read_text()))
        self.slowdown = getattr(settings, 'FARMSIM_PERF_SLOWDOWN', 1.0)

    def test_one_hour_under_a_minute(self):
        """Test that one simulated hour at 1,000 rps runs in under 60 s."""
        budget = ONE_HOUR_BUDGET_S * self.slowdown
        start_time = time.perf_counter()
        result = run_loaded(self.loaded, until=ONE_HOUR_US)
        execution_time = time.perf_counter() - start_time

        self.assertLess(execution_time, budget, f"Run too slow: {execution_time:.1f}s against {budget:.0f}s")
        total = result.report.scope('total')
        self.assertGreater(total.presented, 3_000_000)
        self.assertGreater(availability(result.report, 'total'), 0.9)

    def test_request_rate(self):
        """Test that ten simulated minutes run at the rate the one-hour budget needs."""
        start_time = time.perf_counter()
        result = run_loaded(self.loaded, until=ONE_HOUR_US // 6)
        execution_time = time.perf_counter() - start_time

        rate = result.report.scope('total').presented / execution_time
        self.assertGreater(rate, MIN_REQUESTS_PER_S / self.slowdown, f"Only {rate:.0f} requests/s")
