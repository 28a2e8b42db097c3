"""
Routing domain types: balancer policies and the decisions they produce.
"""
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple


class BalancerVariant(str, Enum):
    """How a clone set spreads requests over its members."""

    SPRAYER_ROUND_ROBIN = 'round_robin'
    SPRAYER_LEAST_QUEUE = 'least_queue'
    SIEVE_RENDEZVOUS = 'sieve'

    @property
    def is_sprayer(self):
        return self is not BalancerVariant.SIEVE_RENDEZVOUS


@dataclass(frozen=True)
class BalancerPolicy:
    """
    Load-balancing policy of a service.

    ``detection_delay`` is the time in microseconds from a node failure
    until the balancer stops selecting the node. Packs of a partitioned
    service use the same delay before failing over.
    """

    variant: BalancerVariant = BalancerVariant.SPRAYER_ROUND_ROBIN
    detection_delay: int = 0

    def __post_init__(self):
        if self.detection_delay < 0:
            raise ValueError("detection_delay must be >= 0")


class RouteDecision(NamedTuple):
    """
    Where a request goes inside one clone set.

    ``nodes`` are the chosen node ids; a write fanned out to every replica
    lists them all in ``fanout`` too. ``store_cost`` is the shared-store busy
    time of a shared-disk write, 0 when the store is not involved.
    """

    nodes: tuple
    fanout: tuple = ()
    store_cost: int = 0

    @property
    def write_amplification(self):
        return len(self.fanout) if self.fanout else 1

    @property
    def node(self):
        return self.nodes[0]


class AffinityHit(NamedTuple):
    """Result of routing a key to the member serving its partition."""

    bucket: int
    partition: int
    node: int


@dataclass
class BalancerCursor:
    """Per-service sprayer state: the last member picked."""

    last_pick: int = None
