"""
Workload domain types.
"""
from dataclasses import dataclass, field
from enum import Enum

from django.conf import settings

from topology.exceptions import InvalidValue


class ArrivalKind(str, Enum):
    POISSON = 'poisson'
    FIXED = 'fixed'


class KeyDistributionKind(str, Enum):
    UNIFORM = 'uniform'
    ZIPF = 'zipf'
    SEQUENTIAL = 'sequential'


class RequestKind(str, Enum):
    READ = 'read'
    WRITE = 'write'


@dataclass(frozen=True)
class ArrivalProcess:
    """Open arrivals: Poisson at ``rate`` rps, or one every ``interval`` µs."""

    kind: ArrivalKind
    rate: float = 0.0
    interval: int = 0


@dataclass(frozen=True)
class KeyDistribution:
    kind: KeyDistributionKind = KeyDistributionKind.UNIFORM
    exponent: float = 0.0


@dataclass(frozen=True)
class WorkloadSpec:
    """
    A stream of requests aimed at one service.

    ``target`` is ``(farm, service)`` for a farm-local stream or
    ``(service,)`` for a stream routed across the geoplex. All times are
    microseconds; ``deadline`` is end to end across forwarding tiers.
    """

    name: str
    target: tuple
    arrival: ArrivalProcess
    read_fraction: float
    key_space: int
    deadline: int
    service_demand: int
    write_demand: int
    duration: int
    start: int = 0
    key_dist: KeyDistribution = field(default_factory=KeyDistribution)

    def __post_init__(self):
        if not 0 <= self.read_fraction <= 1:
            raise InvalidValue(f"Read fraction of workload '{self.name}' must be in [0, 1]", element=self.name)
        if self.deadline <= 0:
            raise InvalidValue(f"Deadline of workload '{self.name}' must be positive", element=self.name)
        if self.service_demand <= 0 or self.write_demand <= 0:
            raise InvalidValue(f"Demands of workload '{self.name}' must be positive", element=self.name)
        if self.key_space < 1:
            raise InvalidValue(f"Key space of workload '{self.name}' must be positive", element=self.name)
        if self.start < 0 or self.duration < 0:
            raise InvalidValue(f"Window of workload '{self.name}' must not be negative", element=self.name)
        if self.arrival.kind is ArrivalKind.POISSON and not self.arrival.rate > 0:
            raise InvalidValue(f"Arrival rate of workload '{self.name}' must be positive", element=self.name)
        if self.arrival.kind is ArrivalKind.FIXED and self.arrival.interval <= 0:
            raise InvalidValue(f"Arrival interval of workload '{self.name}' must be positive", element=self.name)
        if self.key_dist.kind is KeyDistributionKind.ZIPF and not self.key_dist.exponent > 0:
            raise InvalidValue(f"Zipf exponent of workload '{self.name}' must be positive", element=self.name)
        if self.key_dist.kind is KeyDistributionKind.ZIPF:
            limit = getattr(settings, 'FARMSIM_MAX_ZIPF_KEYS', 1 << 20)
            if self.key_space > limit:
                raise InvalidValue(
                    f"Zipf key space {self.key_space} of workload '{self.name}' exceeds the supported maximum of {limit}",
                    element=self.name,
                )

    @property
    def end(self):
        return self.start + self.duration

    @property
    def is_geoplex_target(self):
        return len(self.target) == 1

    @property
    def service_name(self):
        return self.target[-1]


class Request:
    """
    One client request. ``hop`` is the service currently handling it.

    ``demand`` is the node work per tier: the workload's service demand for
    reads, its write demand for writes.
    """

    __slots__ = ('id', 'key', 'write', 'arrival', 'deadline_abs', 'demand', 'hop', 'farm', 'workload')

    def __init__(self, id, key, write, arrival, deadline_abs, demand, workload=None):
        self.id = id
        self.key = key
        self.write = write
        self.arrival = arrival
        self.deadline_abs = deadline_abs
        self.demand = demand
        self.hop = None
        self.farm = None
        self.workload = workload

    def __repr__(self):
        return f"<Request {self.id} {self.kind.value} key={self.key} at={self.arrival}>"

    @property
    def kind(self):
        return RequestKind.WRITE if self.write else RequestKind.READ
