"""
Test factories for building consistent farm specs across all test cases.
Uses factory_boy on the frozen spec dataclasses; nothing touches a database.
"""
import factory

from lifecycle.models import ScenarioAction, ScenarioEvent
from routing.models import BalancerPolicy, BalancerVariant
from topology.builder import build_topology
from topology.models import (
    FarmSpec,
    GeoplexMode,
    GeoplexSpec,
    NodeSpec,
    PackMode,
    PackSpec,
    RaidLevel,
    ServiceKind,
    ServiceSpec,
    StorageModel,
    StorageVariant,
)
from workload.models import ArrivalKind, ArrivalProcess, KeyDistribution, KeyDistributionKind, WorkloadSpec


class NodeSpecFactory(factory.Factory):
    """Factory for a 1000 rps node with a 100 GB disk."""

    class Meta:
        model = NodeSpec

    id = factory.Sequence(lambda n: n)
    service_rate = 1000.0
    disk_capacity = 100 * 10 ** 9
    raid_level = RaidLevel.NONE
    degraded_rate_factor = 1.0


class BalancerPolicyFactory(factory.Factory):
    class Meta:
        model = BalancerPolicy

    variant = BalancerVariant.SPRAYER_ROUND_ROBIN
    detection_delay = 0


class CloneServiceFactory(factory.Factory):
    """Factory for a shared-nothing cloned service of ``clone_count`` nodes."""

    class Meta:
        model = ServiceSpec

    class Params:
        clone_count = 3

    name = 's'
    kind = ServiceKind.RACS
    storage = factory.LazyFunction(StorageModel)
    balancer = factory.SubFactory(BalancerPolicyFactory)
    nodes = factory.LazyAttribute(
        lambda obj: tuple(NodeSpecFactory(id=index) for index in range(obj.clone_count))
    )


class SharedDiskCloneServiceFactory(CloneServiceFactory):
    """Cloned service whose clones share one store."""

    storage = factory.LazyFunction(
        lambda: StorageModel(
            variant=StorageVariant.SHARED_DISK,
            shared_store=NodeSpecFactory(id=-1, service_rate=2000.0),
            invalidation_cost=100,
        )
    )


def make_packs(partition_count, pack_size=1, mode=PackMode.ACTIVE_PASSIVE,
               storage_variant=StorageVariant.SHARED_NOTHING, hosts=1):
    """Packs of ``pack_size`` nodes, each hosting ``hosts`` consecutive partitions."""
    packs = []
    pack_count = -(-partition_count // hosts)
    for pack_id in range(pack_count):
        first = pack_id * pack_size
        packs.append(PackSpec(
            id=pack_id,
            members=tuple(NodeSpecFactory(id=node_id) for node_id in range(first, first + pack_size)),
            mode=mode,
            storage_variant=storage_variant,
            partitions_hosted=tuple(range(pack_id * hosts, min(partition_count, (pack_id + 1) * hosts))),
        ))
    return tuple(packs)


class PartitionServiceFactory(factory.Factory):
    """Factory for a partitioned service, one bare node per partition by default."""

    class Meta:
        model = ServiceSpec

    class Params:
        partition_count = 4
        pack_size = 1
        pack_mode = PackMode.ACTIVE_PASSIVE
        hosts = 1

    name = 's'
    kind = ServiceKind.RAPS
    storage = factory.LazyFunction(StorageModel)
    balancer = factory.SubFactory(BalancerPolicyFactory)
    packs = factory.LazyAttribute(
        lambda obj: make_packs(obj.partition_count, obj.pack_size, obj.pack_mode, hosts=obj.hosts)
    )
    bucket_count = 64


class FarmSpecFactory(factory.Factory):
    class Meta:
        model = FarmSpec

    name = 'f'
    services = factory.LazyFunction(lambda: (CloneServiceFactory(),))


class GeoplexSpecFactory(factory.Factory):
    class Meta:
        model = GeoplexSpec

    farms = factory.LazyFunction(lambda: (FarmSpecFactory(),))
    mode = GeoplexMode.NONE
    replicas = ()
    detection_delay = 1_000_000


class WorkloadSpecFactory(factory.Factory):
    """Read-only fixed-rate workload aimed at ``f/s``: 1 ms apart for 10 s."""

    class Meta:
        model = WorkloadSpec

    name = factory.Sequence(lambda n: f"w{n}")
    target = ('f', 's')
    arrival = factory.LazyFunction(lambda: ArrivalProcess(ArrivalKind.FIXED, interval=1_000))
    read_fraction = 1.0
    key_space = 65_536
    deadline = 1_000_000
    service_demand = 100
    write_demand = 100
    duration = 10_000_000
    start = 0
    key_dist = factory.LazyFunction(KeyDistribution)


class SequentialWorkloadSpecFactory(WorkloadSpecFactory):
    key_dist = factory.LazyFunction(lambda: KeyDistribution(KeyDistributionKind.SEQUENTIAL))


def single_service_topology(service):
    """Validated topology of one farm ``f`` holding ``service``."""
    return build_topology(GeoplexSpecFactory(farms=(FarmSpecFactory(services=(service,)),)))


def scenario_event(at, action, *path):
    return ScenarioEvent(at=at, action=ScenarioAction(action), path=tuple(path))
