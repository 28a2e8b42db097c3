"""
Run accounting: the counters every request outcome lands in and their
conversion into a ``RunReport`` when the run ends.
"""
from array import array

from metrics.models import NodeReport, RunReport, ScopeCounters, ScopeReport
from metrics.statistics import utilization

TOTAL_SCOPE = 'total'


class Accountant:
    """
    Owns the counters of every scope of a run.

    Scopes are ``total`` (every client request), ``<farm>`` (client
    requests that entered the farm) and ``<farm>/<service>`` (every hop
    presented to the service). Counters are attached to the farm and service
    runtimes so the request path never looks a scope up by name.
    """

    def __init__(self, state, window):
        self.window = window
        self.total = ScopeCounters(TOTAL_SCOPE, window)
        self.scopes = {TOTAL_SCOPE: self.total}
        for farm in state.farms.values():
            farm.counters = self._counters(farm.name)
            for service in farm.services.values():
                service.counters = self._counters(service.path)
                service.farm_counters = farm.counters

    def _counters(self, scope):
        counters = ScopeCounters(scope, self.window)
        self.scopes[scope] = counters
        return counters

    def record_node_write(self, service):
        service.counters.node_writes += 1
        service.farm_counters.node_writes += 1
        self.total.node_writes += 1

    def finalize(self, state, seed, duration, warnings=()):
        """
        Close the books at the end of the run.

        Requests still open are counted in flight; busy time and downtime
        still running are cut at ``duration``.
        """
        scopes = {}
        for name, counters in sorted(self.scopes.items()):
            latencies = array('q', sorted(counters.latencies))
            scopes[name] = ScopeReport(
                scope=name,
                presented=counters.presented,
                in_deadline=counters.in_deadline,
                late=counters.late,
                failed=counters.failed,
                in_flight=counters.presented - counters.resolved,
                latencies=latencies,
                client_writes=counters.client_writes,
                node_writes=counters.node_writes,
                series=dict(sorted(counters.series.items())),
            )

        nodes = {}
        for node in state.nodes():
            busy = node.busy_time
            if node.current is not None:
                busy += duration - node.busy_since
            downtime = node.downtime
            if node.down_since is not None:
                downtime += duration - node.down_since
            nodes[node.path] = NodeReport(
                path=node.path,
                busy_us=busy,
                utilization=utilization(busy, duration),
                writes=node.writes,
                downtime_us=downtime,
                queue_samples=array('q', node.samples),
            )

        return RunReport(
            seed=seed,
            duration_us=duration,
            window_us=self.window,
            scopes=scopes,
            nodes=nodes,
            warnings=tuple(warnings),
        )
