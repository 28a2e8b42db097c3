"""
The simulation kernel: one topology, its workloads and its fault script,
run on a single event queue and a single random stream.
"""
import logging
from itertools import count

from engine.events import EventKind
from engine.exceptions import SimulationFinished
from engine.models import RunSettings
from engine.queue import EventQueue
from engine.rng import SplitMix64
from engine.state import SimulationState
from engine.trace import TraceLog
from lifecycle.controller import LifecycleController
from metrics.accounting import Accountant
from routing.flow import RequestFlow
from topology.models import node_name
from workload.generators import make_request, next_arrival

logger = logging.getLogger(__name__)


class Simulation:
    """
    A single-shot run.

    Build it from a validated ``Topology``, a list of ``WorkloadSpec`` and a
    list of ``ScenarioEvent``, then call ``run_until`` once::

        report = Simulation(topology, workloads, events, settings).run_until()
    """

    def __init__(self, topology, workloads=(), events=(), settings=None):
        self.settings = settings or RunSettings.from_settings()
        self.topology = topology
        self.workloads = list(workloads)
        self.events = sorted(events, key=lambda event: event.at)
        self.state = SimulationState(topology, self.settings.takeover_time, self.settings.failback)
        self.queue = EventQueue()
        self.rng = SplitMix64(self.settings.seed)
        self.trace = TraceLog(verbose=self.settings.trace)
        self.warnings = []
        self.accountant = Accountant(self.state, self.settings.window)
        self.flow = RequestFlow(self)
        self.lifecycle = LifecycleController(self)
        self.finished = False
        self.until = None
        self.dispatched = 0
        self._request_ids = count()

        apply = self._apply_scenario_event
        self._handlers = {
            EventKind.ARRIVAL: self._on_arrival,
            EventKind.SERVICE_DONE: self.flow.on_service_done,
            EventKind.NODE_FAIL: apply,
            EventKind.NODE_REPAIR: apply,
            EventKind.DISK_FAIL: apply,
            EventKind.DISK_REPAIR: apply,
            EventKind.SITE_FAIL: apply,
            EventKind.SITE_REPAIR: apply,
            EventKind.ADD_CLONE: apply,
            EventKind.ADD_PARTITION: apply,
            EventKind.FAILURE_DETECTED: self._on_failure_detected,
            EventKind.TAKEOVER_DONE: self._on_takeover_done,
            EventKind.CLONE_JOINED: self._on_clone_joined,
            EventKind.BUCKET_MOVE_DONE: self._on_bucket_move_done,
            EventKind.GEOPLEX_DETECTED: self._on_geoplex_detected,
            EventKind.SAMPLE: self._on_sample,
        }

    def __repr__(self):
        return f"<Simulation seed={self.settings.seed} t={self.queue.now}>"

    @property
    def now(self):
        return self.queue.now

    def default_until(self):
        """End of the last workload window."""
        return max((workload.end for workload in self.workloads), default=0)

    def run_until(self, until=None):
        """
        Dispatch every event due at or before ``until`` and close the books.

        ``until`` defaults to the settings' ``until``, then to the end of the
        last workload. Requests still open at ``until`` are counted in
        flight.

        Returns:
            RunReport: The finalized report

        Raises:
            SimulationFinished: If this simulation already ran
        """
        if self.finished:
            raise SimulationFinished("This simulation has already run; build a new one")
        if until is None:
            until = self.settings.until if self.settings.until is not None else self.default_until()

        logger.info("Run seed=%d until=%dus: %d nodes, %d workloads, %d scripted events",
                    self.settings.seed, until, self.topology.node_count, len(self.workloads), len(self.events))
        self.until = until
        self._prime(until)
        self.dispatched = self.queue.run(until, self._handlers)
        if until > self.queue.now:
            self.queue.advance_to(until)
        self.finished = True
        logger.info("Run seed=%d done: %d events dispatched, %d warnings",
                    self.settings.seed, self.dispatched, len(self.warnings))
        return self.accountant.finalize(self.state, self.settings.seed, until, self.warnings)

    def _prime(self, until):
        self._trace_initial_ownership()

        # Scripted events go first so they win ties with same-time arrivals
        for event in self.events:
            if event.at <= until:
                self.queue.schedule(event.at, event.action.event_kind, event)

        for workload in self.workloads:
            first = next_arrival(workload, self.rng, workload.start)
            if first is not None:
                self.queue.schedule(first, EventKind.ARRIVAL, workload)

        window = self.settings.window
        if 0 < window <= until:
            self.queue.schedule(window, EventKind.SAMPLE)

    def _trace_initial_ownership(self):
        for service in self.state.services():
            if not service.is_raps:
                continue
            for partition in sorted(service.serving):
                member = service.serving[partition]
                owner = node_name(member) if member is not None else '-'
                self.trace.record(0, 'Owner', service.path, f"p{partition} {owner}")
            for bucket, partition in enumerate(service.assignment):
                self.trace.record(0, 'Bucket', service.path, f"b{bucket} p{partition}")

    def _apply_scenario_event(self, event):
        self.trace.record(event.time, event.kind.label, event.payload.target)
        self.lifecycle.apply(event.payload)

    def _on_arrival(self, event):
        workload = event.payload
        t = event.time
        request = make_request(workload, self.rng, t, next(self._request_ids))
        following = next_arrival(workload, self.rng, t)
        if following is not None:
            self.queue.schedule(following, EventKind.ARRIVAL, workload)
        self.flow.admit(request, workload, t)

    def _on_sample(self, event):
        for node in self.state.nodes():
            node.samples.append(node.queue_length)
        following = event.time + self.settings.window
        if following <= self.until:
            self.queue.schedule(following, EventKind.SAMPLE)

    # Timer events of the lifecycle, traced with their subject

    def _on_failure_detected(self, event):
        service, node_id, _ = event.payload
        self.trace.record(event.time, event.kind.label, service.nodes[node_id].path)
        self.lifecycle.on_failure_detected(event.payload)

    def _on_takeover_done(self, event):
        service, _, partition, target = event.payload
        self.trace.record(event.time, event.kind.label, service.path, f"p{partition} {node_name(target)}")
        self.lifecycle.on_takeover_done(event.payload)

    def _on_clone_joined(self, event):
        service, node_id = event.payload
        self.trace.record(event.time, event.kind.label, service.nodes[node_id].path)
        self.lifecycle.on_clone_joined(event.payload)

    def _on_bucket_move_done(self, event):
        service, move = event.payload
        self.trace.record(event.time, event.kind.label, service.path,
                          f"b{move.bucket} p{move.source}->p{move.destination}")
        self.lifecycle.on_bucket_move_done(event.payload)

    def _on_geoplex_detected(self, event):
        farm, _ = event.payload
        self.trace.record(event.time, event.kind.label, farm.name)
        self.lifecycle.on_geoplex_detected(event.payload)
