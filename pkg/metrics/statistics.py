"""
Measures computed from a finished ``RunReport``.

Ratios are exact ``Fraction`` values; ``format_ratio`` renders them with six
decimals, rounding half up.
"""
import math
from array import array
from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction
from functools import reduce

import numpy as np

from core.exceptions import MetricsError
from core.utils import US_PER_SECOND
from metrics.exceptions import EmptySample, NoTraffic, NoWrites
from metrics.models import NodeReport, RunReport, ScopeReport

SIX_PLACES = Decimal('0.000001')


def format_ratio(value):
    """Six-decimal rendering of an exact ratio."""
    quotient = Decimal(value.numerator) / Decimal(value.denominator)
    return str(quotient.quantize(SIX_PLACES, rounding=ROUND_HALF_UP))


def _scope(report, scope):
    found = report.scopes.get(scope)
    if found is None:
        raise NoTraffic(f"Scope '{scope}' saw no requests")
    return found


def availability(report, scope):
    """
    Fraction of the scope's presented requests serviced within their deadline.

    Raises:
        NoTraffic: If nothing was presented to the scope
    """
    counters = _scope(report, scope)
    if counters.presented == 0:
        raise NoTraffic(f"Scope '{scope}' saw no requests")
    return Fraction(counters.in_deadline, counters.presented)


def percentile(latencies, p):
    """
    Nearest-rank percentile: the value of rank ``ceil(p/100 * n)`` in
    ascending order.

    Raises:
        EmptySample: If ``latencies`` is empty
        MetricsError: If ``p`` is outside (0, 100]
    """
    n = len(latencies)
    if n == 0:
        raise EmptySample("Cannot take a percentile of an empty sample")
    p = Fraction(str(p))
    if not 0 < p <= 100:
        raise MetricsError(f"Percentile must be in (0, 100], got {p}")
    index = math.ceil(p * n / 100) - 1
    values = np.asarray(latencies, dtype=np.int64)
    return int(np.partition(values, index)[index])


def write_amplification(report, service):
    """
    Node-level write executions per client write at ``service``.

    Raises:
        NoWrites: If the service received no client writes
    """
    counters = report.scopes.get(service)
    if counters is None or counters.client_writes == 0:
        raise NoWrites(f"Service '{service}' received no client writes")
    return Fraction(counters.node_writes, counters.client_writes)


def throughput(report, scope):
    """Completed requests per simulated second."""
    counters = _scope(report, scope)
    if report.duration_us == 0:
        return Fraction(0)
    return Fraction(counters.serviced * US_PER_SECOND, report.duration_us)


def utilization(busy_us, duration_us):
    if duration_us <= 0:
        return Fraction(0)
    return min(Fraction(busy_us, duration_us), Fraction(1))


def _merge_series(left, right):
    merged = dict(left)
    for window, count in right.items():
        merged[window] = merged.get(window, 0) + count
    return merged


def _merge_scope(left, right):
    latencies = array('q', np.sort(np.concatenate([
        np.asarray(left.latencies, dtype=np.int64),
        np.asarray(right.latencies, dtype=np.int64),
    ])).tolist())
    return ScopeReport(
        scope=left.scope,
        presented=left.presented + right.presented,
        in_deadline=left.in_deadline + right.in_deadline,
        late=left.late + right.late,
        failed=left.failed + right.failed,
        in_flight=left.in_flight + right.in_flight,
        latencies=latencies,
        client_writes=left.client_writes + right.client_writes,
        node_writes=left.node_writes + right.node_writes,
        series=_merge_series(left.series, right.series),
    )


def _merge_pair(left, right):
    duration = left.duration_us + right.duration_us
    scopes = dict(left.scopes)
    for name, scope in right.scopes.items():
        scopes[name] = _merge_scope(scopes[name], scope) if name in scopes else scope
    nodes = {}
    for path in list(left.nodes) + [path for path in right.nodes if path not in left.nodes]:
        sides = [report.nodes[path] for report in (left, right) if path in report.nodes]
        busy = sum(node.busy_us for node in sides)
        nodes[path] = NodeReport(
            path=path,
            busy_us=busy,
            utilization=utilization(busy, duration),
            writes=sum(node.writes for node in sides),
            downtime_us=sum(node.downtime_us for node in sides),
            queue_samples=reduce(lambda acc, node: acc + node.queue_samples, sides, array('q')),
        )
    return RunReport(
        seed=None,
        duration_us=duration,
        window_us=left.window_us,
        scopes=scopes,
        nodes=nodes,
        warnings=left.warnings + right.warnings,
    )


def merge_reports(reports):
    """
    Fold seed-sweep reports into one: counters and latencies are pooled,
    durations and busy times add up.
    """
    reports = list(reports)
    if not reports:
        raise MetricsError("Nothing to merge")
    if len(reports) == 1:
        return reports[0]
    return reduce(_merge_pair, reports)
