"""
Metric domain types: per-request outcomes, the live counters the engine
updates and the immutable report a run produces.
"""
from array import array
from dataclasses import dataclass, field
from enum import Enum


class Outcome(str, Enum):
    SERVICED_IN_DEADLINE = 'ServicedInDeadline'
    SERVICED_LATE = 'ServicedLate'
    FAILED = 'Failed'
    IN_FLIGHT_AT_END = 'InFlightAtEnd'

    @property
    def is_serviced(self):
        return self in (Outcome.SERVICED_IN_DEADLINE, Outcome.SERVICED_LATE)


@dataclass(frozen=True)
class RequestOutcome:
    """How one request (or one hop of it) ended, for a given scope."""

    request_id: int
    scope: str
    outcome: Outcome
    completion: int = None
    latency: int = None

    def __post_init__(self):
        if self.outcome.is_serviced != (self.latency is not None):
            raise ValueError("latency is present exactly when the request was serviced")

    @classmethod
    def serviced(cls, request, scope, completion):
        latency = completion - request.arrival
        on_time = completion <= request.deadline_abs
        outcome = Outcome.SERVICED_IN_DEADLINE if on_time else Outcome.SERVICED_LATE
        return cls(request.id, scope, outcome, completion, latency)


class ScopeCounters:
    """Running counters of one scope, updated on the engine's hot path."""

    __slots__ = (
        'scope', 'presented', 'in_deadline', 'late', 'failed',
        'latencies', 'client_writes', 'node_writes', 'series', 'window',
    )

    def __init__(self, scope, window):
        self.scope = scope
        self.presented = 0
        self.in_deadline = 0
        self.late = 0
        self.failed = 0
        self.latencies = array('q')
        self.client_writes = 0
        self.node_writes = 0
        self.series = {}
        self.window = window

    def present(self, write=False):
        self.presented += 1
        if write:
            self.client_writes += 1

    def serve(self, latency, on_time, completion):
        if on_time:
            self.in_deadline += 1
        else:
            self.late += 1
        self.latencies.append(latency)
        slot = completion // self.window
        self.series[slot] = self.series.get(slot, 0) + 1

    def fail(self):
        self.failed += 1

    @property
    def resolved(self):
        return self.in_deadline + self.late + self.failed


@dataclass(frozen=True)
class ScopeReport:
    """
    Final counters of one scope.

    ``latencies`` holds every serviced latency in µs, ascending.
    ``series`` maps a window index to the completions in that window.
    """

    scope: str
    presented: int = 0
    in_deadline: int = 0
    late: int = 0
    failed: int = 0
    in_flight: int = 0
    latencies: array = field(default_factory=lambda: array('q'))
    client_writes: int = 0
    node_writes: int = 0
    series: dict = field(default_factory=dict)

    @property
    def serviced(self):
        return self.in_deadline + self.late


@dataclass(frozen=True)
class NodeReport:
    """Per-node totals; ``queue_samples`` is the queue length at each window boundary."""

    path: str
    busy_us: int = 0
    utilization: object = 0
    writes: int = 0
    downtime_us: int = 0
    queue_samples: array = field(default_factory=lambda: array('q'))


@dataclass(frozen=True)
class RunReport:
    """Everything a finished run measured."""

    seed: int
    duration_us: int
    window_us: int = 1_000_000
    scopes: dict = field(default_factory=dict)
    nodes: dict = field(default_factory=dict)
    warnings: tuple = ()

    def scope(self, name):
        return self.scopes.get(name)
