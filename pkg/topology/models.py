"""
Static farm model: geoplexes of farms, farms of services, services made of
clones (RACS) or of partitions hosted by packs (RAPS).

Every type here is immutable once built. Runtime state (node health, who
serves a partition right now) lives in the engine.
"""
from dataclasses import dataclass, field
from enum import Enum

from routing.models import BalancerPolicy


class RaidLevel(str, Enum):
    NONE = 'none'
    RAID1 = 'raid1'
    RAID5 = 'raid5'

    @property
    def masks_single_fault(self):
        return self is not RaidLevel.NONE


class StorageVariant(str, Enum):
    SHARED_NOTHING = 'shared_nothing'
    SHARED_DISK = 'shared_disk'


class ServiceKind(str, Enum):
    RACS = 'racs'
    RAPS = 'raps'


class PackMode(str, Enum):
    ACTIVE_ACTIVE = 'active_active'
    ACTIVE_PASSIVE = 'active_passive'


class GeoplexMode(str, Enum):
    ACTIVE_ACTIVE = 'active_active'
    ACTIVE_PASSIVE = 'active_passive'
    NONE = 'none'


STORE_NAME = 'store'

# The shared store of a shared-disk service is not a clone and has no index.
STORE_ID = -1


def node_name(node_id):
    if node_id == STORE_ID:
        return STORE_NAME
    return f"n{node_id}"


@dataclass(frozen=True)
class NodeSpec:
    """
    One logical server. ``service_rate`` is in requests per second and sets
    the node's speed relative to the first node of its service.
    """

    id: int
    service_rate: float
    disk_capacity: int = 0
    raid_level: RaidLevel = RaidLevel.NONE
    degraded_rate_factor: float = 1.0

    @property
    def name(self):
        return node_name(self.id)

    def with_id(self, node_id):
        return NodeSpec(
            id=node_id,
            service_rate=self.service_rate,
            disk_capacity=self.disk_capacity,
            raid_level=self.raid_level,
            degraded_rate_factor=self.degraded_rate_factor,
        )


@dataclass(frozen=True)
class StorageModel:
    """Where a service keeps its state."""

    variant: StorageVariant = StorageVariant.SHARED_NOTHING
    shared_store: NodeSpec = None
    invalidation_cost: int = 0

    @property
    def is_shared_disk(self):
        return self.variant is StorageVariant.SHARED_DISK


@dataclass(frozen=True)
class PackSpec:
    """The group of nodes able to host a set of partitions."""

    id: int
    members: tuple
    mode: PackMode = PackMode.ACTIVE_PASSIVE
    storage_variant: StorageVariant = StorageVariant.SHARED_NOTHING
    partitions_hosted: tuple = ()

    @property
    def member_ids(self):
        return tuple(sorted(member.id for member in self.members))

    @property
    def primary(self):
        """Active member at t=0 of an active-passive pack: the lowest id."""
        if self.mode is PackMode.ACTIVE_PASSIVE and self.members:
            return self.member_ids[0]
        return None

    def initial_serving(self):
        """Partition -> member id at t=0."""
        if self.mode is PackMode.ACTIVE_PASSIVE:
            return {partition: self.primary for partition in self.partitions_hosted}
        ids = self.member_ids
        return {
            partition: ids[index % len(ids)]
            for index, partition in enumerate(self.partitions_hosted)
        }


@dataclass(frozen=True)
class ServiceSpec:
    """
    A functionally specialized service inside a farm.

    A RACS lists its clones in ``nodes``; a RAPS lists its ``packs`` and
    spreads ``bucket_count`` buckets of state over their partitions.
    """

    name: str
    kind: ServiceKind
    storage: StorageModel = field(default_factory=StorageModel)
    balancer: BalancerPolicy = field(default_factory=BalancerPolicy)
    nodes: tuple = ()
    packs: tuple = ()
    bucket_count: int = 0
    state_size: int = 0
    forwards_to: str = None
    deadline_passthrough: bool = True
    retry: bool = False

    @property
    def is_racs(self):
        return self.kind is ServiceKind.RACS

    @property
    def is_raps(self):
        return self.kind is ServiceKind.RAPS

    @property
    def partition_count(self):
        return sum(len(pack.partitions_hosted) for pack in self.packs)

    @property
    def all_nodes(self):
        if self.is_racs:
            return tuple(self.nodes)
        return tuple(member for pack in self.packs for member in pack.members)

    @property
    def base_rate(self):
        """Rate of the first declared node; demands are expressed against it."""
        nodes = self.all_nodes
        return nodes[0].service_rate if nodes else 1.0

    @property
    def template_node(self):
        return self.all_nodes[0]


@dataclass(frozen=True)
class FarmSpec:
    """All services at one site."""

    name: str
    services: tuple = ()

    def service(self, name):
        for service in self.services:
            if service.name == name:
                return service
        return None

    @property
    def node_count(self):
        total = 0
        for service in self.services:
            total += len(service.all_nodes)
            if service.storage.shared_store is not None:
                total += 1
        return total


@dataclass(frozen=True)
class GeoplexSpec:
    """
    The whole modeled system. ``replicas`` names the farms that replicate
    each other when ``mode`` is not ``none``; other farms stand alone.
    """

    farms: tuple = ()
    mode: GeoplexMode = GeoplexMode.NONE
    replicas: tuple = ()
    detection_delay: int = 1_000_000

    def farm(self, name):
        for farm in self.farms:
            if farm.name == name:
                return farm
        return None


@dataclass(frozen=True)
class PartitionMap:
    """
    Bucket -> partition -> (pack, member) table of one RAPS service.

    ``assignment[b]`` is the partition of bucket ``b``; ``serving`` maps a
    partition to the ``(pack_id, member_id)`` serving it at t=0.
    """

    bucket_count: int
    assignment: tuple
    serving: dict = field(default_factory=dict)

    @property
    def partition_count(self):
        return max(self.assignment) + 1 if self.assignment else 0

    def bucket_counts(self):
        counts = [0] * self.partition_count
        for partition in self.assignment:
            counts[partition] += 1
        return counts


@dataclass(frozen=True)
class Topology:
    """Validated, immutable farm model produced by ``build_topology``."""

    geoplex: GeoplexSpec
    partition_maps: dict = field(default_factory=dict)

    @property
    def farms(self):
        return self.geoplex.farms

    def farm(self, name):
        return self.geoplex.farm(name)

    def service(self, farm_name, service_name):
        farm = self.farm(farm_name)
        return farm.service(service_name) if farm else None

    def partition_map(self, farm_name, service_name):
        return self.partition_maps.get((farm_name, service_name))

    def services(self):
        """Yield ``(farm, service)`` pairs in declaration order."""
        for farm in self.farms:
            for service in farm.services:
                yield farm, service

    @property
    def node_count(self):
        return sum(farm.node_count for farm in self.farms)
