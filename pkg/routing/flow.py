"""
Request flow: carries each client request through the routing layers, the
node queues and the forwarding chain, and books its outcome.

A ``Visit`` is one request at one service. A visit finishes when its own
node work is done and, with deadline passthrough, when the visit it spawned
at the next tier has finished too.
"""
import logging

from engine.events import EventKind
from engine.state import Job
from metrics.accounting import TOTAL_SCOPE
from metrics.models import Outcome, RequestOutcome
from routing.balancers import balancer_pick
from routing.exceptions import NoHealthyMember, NoLiveFarm, PartitionUnavailable
from routing.router import affinity_route, plan_fanout, route_geoplex
from topology.models import node_name

logger = logging.getLogger(__name__)


class Visit:
    __slots__ = ('request', 'service', 'parent', 'root', 'pending', 'store_cost', 'finished')

    def __init__(self, request, service, parent=None, root=False):
        self.request = request
        self.service = service
        self.parent = parent
        self.root = root
        self.pending = 0
        self.store_cost = 0
        self.finished = False


class RequestFlow:
    """Request path of one simulation."""

    def __init__(self, simulation):
        self.simulation = simulation
        self.state = simulation.state
        self.queue = simulation.queue
        self.trace = simulation.trace
        self.verbose = simulation.trace.verbose
        self.accountant = simulation.accountant
        self.total = simulation.accountant.total

    # Entry

    def admit(self, request, workload, t):
        """Present a fresh client request arriving at ``t``."""
        self.total.present(request.write)
        if workload.is_geoplex_target:
            try:
                farm_name = route_geoplex(request, self.state.topology.geoplex, self.state)
            except NoLiveFarm:
                self.total.fail()
                if self.verbose:
                    self._trace_outcome(RequestOutcome(request.id, TOTAL_SCOPE, Outcome.FAILED), t)
                return
        else:
            farm_name = workload.target[0]

        request.farm = farm_name
        farm = self.state.farms[farm_name]
        farm.counters.present(request.write)
        self.present(Visit(request, farm.services[workload.service_name], root=True), t)

    def present(self, visit, t):
        """Route ``visit`` at its service and queue the node work."""
        service = visit.service
        request = visit.request
        request.hop = service.name
        service.counters.present(request.write and service.terminal)

        store = service.store
        if store is not None and not store.up:
            self.fail(visit, t)
            return
        if service.is_raps:
            self._route_partitioned(visit, service, request, t)
        else:
            self._route_cloned(visit, service, request, t)

    def _route_partitioned(self, visit, service, request, t):
        try:
            hit = affinity_route(request, service, service.serving)
        except PartitionUnavailable:
            self.fail(visit, t)
            return
        node = service.nodes[hit.node]
        if self.verbose:
            self.trace.record(t, 'Route', service.path,
                              f"req={request.id} b{hit.bucket} p{hit.partition} {node.name}")
        if not node.up:
            self.fail(visit, t)
            return
        visit.pending = 1
        self.enqueue(node, Job(visit, request.demand, request.write and service.terminal), t)

    def _route_cloned(self, visit, service, request, t):
        spec = service.spec
        try:
            decision = plan_fanout(
                request, spec, service.view, service.cursor, service.queue_length_of, service.terminal,
            )
        except NoHealthyMember:
            self.fail(visit, t)
            return

        nodes = service.nodes
        if decision.fanout:
            replicas = [node_id for node_id in decision.fanout if nodes[node_id].up]
            if self.verbose:
                self.trace.record(t, 'Route', service.path,
                                  f"req={request.id} {','.join(node_name(n) for n in replicas)}")
            if not replicas or (len(replicas) < len(decision.fanout) and not spec.retry):
                self.fail(visit, t)
                return
            visit.pending = len(replicas)
            for node_id in replicas:
                self.enqueue(nodes[node_id], Job(visit, request.demand, True), t)
            return

        chosen = decision.node
        if not nodes[chosen].up and spec.retry:
            others = [member for member in service.view if member != chosen]
            try:
                chosen = balancer_pick(spec.balancer, others, service.cursor, request.id, service.queue_length_of)
            except NoHealthyMember:
                self.fail(visit, t)
                return
        node = nodes[chosen]
        if self.verbose:
            self.trace.record(t, 'Route', service.path, f"req={request.id} {node.name}")
        if not node.up:
            self.fail(visit, t)
            return
        visit.pending = 1
        visit.store_cost = decision.store_cost
        self.enqueue(node, Job(visit, request.demand, request.write and service.terminal), t)

    # Node queues

    def enqueue(self, node, job, t):
        if node.current is None:
            self.start(node, job, t)
        else:
            node.queue.append(job)

    def start(self, node, job, t):
        node.current = job
        node.busy_since = t
        self.queue.schedule(t + node.service_time(job.demand), EventKind.SERVICE_DONE, (node, node.epoch))
        if self.verbose:
            self.trace.record(t, 'ServiceStart', node.path, f"req={job.visit.request.id}")

    def on_service_done(self, event):
        node, epoch = event.payload
        if epoch != node.epoch:
            return
        t = event.time
        job = node.current
        node.current = None
        node.busy_time += t - node.busy_since
        if job.write:
            node.writes += 1
            self.accountant.record_node_write(job.visit.service)
        if node.queue:
            self.start(node, node.queue.popleft(), t)
        self.job_finished(job, t)

    def abort_node(self, node, t):
        """Fail every visit with work queued at or running on ``node``."""
        node.epoch += 1
        jobs = list(node.queue)
        if node.current is not None:
            node.busy_time += t - node.busy_since
            jobs.insert(0, node.current)
            node.current = None
        node.queue.clear()
        if jobs:
            logger.debug("%d %s loses %d jobs", t, node.path, len(jobs))
        for job in jobs:
            self.fail(job.visit, t)

    # Completion

    def job_finished(self, job, t):
        visit = job.visit
        if visit.finished:
            return
        if visit.store_cost and not job.store:
            # Shared-disk write: the store operation follows the node's work
            store = visit.service.store
            if not store.up:
                self.fail(visit, t)
                return
            self.enqueue(store, Job(visit, visit.store_cost, store=True), t)
            return
        visit.pending -= 1
        if visit.pending:
            return

        service = visit.service
        following = service.next_service
        if following is None:
            self.complete(visit, t)
        elif service.spec.deadline_passthrough:
            self.present(Visit(visit.request, following, parent=visit), t)
        else:
            self.complete(visit, t)
            self.present(Visit(visit.request, following), t)

    def complete(self, visit, t):
        request = visit.request
        while visit is not None:
            visit.finished = True
            latency = t - request.arrival
            on_time = t <= request.deadline_abs
            visit.service.counters.serve(latency, on_time, t)
            if visit.root:
                visit.service.farm_counters.serve(latency, on_time, t)
                self.total.serve(latency, on_time, t)
                if self.verbose:
                    self._trace_outcome(RequestOutcome.serviced(request, request.farm, t), t)
            visit = visit.parent

    def fail(self, visit, t):
        if visit.finished:
            return
        request = visit.request
        while visit is not None:
            visit.finished = True
            visit.service.counters.fail()
            if visit.root:
                visit.service.farm_counters.fail()
                self.total.fail()
                if self.verbose:
                    self._trace_outcome(RequestOutcome(request.id, request.farm, Outcome.FAILED), t)
            visit = visit.parent

    def _trace_outcome(self, outcome, t):
        if outcome.outcome is Outcome.FAILED:
            self.trace.record(t, 'Fail', outcome.scope, f"req={outcome.request_id}")
        else:
            self.trace.record(t, 'Done', outcome.scope,
                              f"req={outcome.request_id} {outcome.outcome.value} latency={outcome.latency}")
