"""
Routing failures. Each one fails the request being routed; none aborts a run.
"""
from core.exceptions import SimulationError


class RoutingError(SimulationError):
    pass


class NoHealthyMember(RoutingError):
    """The balancer believes every member of the clone set is down."""
    pass


class NoLiveFarm(RoutingError):
    """The geoplex believes every replica farm is down."""
    pass


class PartitionUnavailable(RoutingError):
    """The partition owning the key has no serving member right now."""

    def __init__(self, partition):
        self.partition = partition
        super().__init__(f"Partition {partition} is unavailable")
