"""
Topology validation and construction.
"""
import logging

from topology.exceptions import (
    DanglingForward,
    DuplicateId,
    EmptyPack,
    EmptyService,
    ForwardCycle,
    GeoplexTooSmall,
    InvalidValue,
    PartitionHosting,
    SharedDiskWithoutStore,
    UnknownFarm,
)
from topology.models import GeoplexMode, PartitionMap, Topology
from topology.partitioning import partition_map_init

logger = logging.getLogger(__name__)

# Report scope of the whole run
RESERVED_FARM_NAME = 'total'


def build_topology(spec):
    """
    Validate a geoplex spec and derive the initial partition maps.

    Args:
        spec (GeoplexSpec): Farms, services, nodes and packs as declared

    Returns:
        Topology: Immutable validated topology

    Raises:
        FarmValidationError: One of the ``topology.exceptions`` classes,
            naming the offending element
    """
    _validate_geoplex(spec)
    partition_maps = {}
    for farm in spec.farms:
        _validate_farm(farm)
        for service in farm.services:
            if service.is_raps:
                partition_maps[(farm.name, service.name)] = _initial_partition_map(farm, service)
    topology = Topology(geoplex=spec, partition_maps=partition_maps)
    logger.debug(
        "Built topology: %d farms, %d nodes, %d partitioned services",
        len(spec.farms), topology.node_count, len(partition_maps),
    )
    return topology


def _validate_geoplex(spec):
    seen = set()
    for farm in spec.farms:
        if farm.name == RESERVED_FARM_NAME:
            raise InvalidValue(f"Farm name '{RESERVED_FARM_NAME}' is reserved for the run-wide totals", element=farm.name)
        if farm.name in seen:
            raise DuplicateId(f"Farm '{farm.name}' is declared twice", element=farm.name)
        seen.add(farm.name)

    if spec.mode is GeoplexMode.NONE:
        return
    if len(spec.replicas) < 2:
        raise GeoplexTooSmall(
            f"A {spec.mode.value} geoplex needs at least 2 farms, got {len(spec.replicas)}",
            element='geoplex',
        )
    if len(set(spec.replicas)) != len(spec.replicas):
        raise DuplicateId("Geoplex lists a farm twice", element='geoplex')
    for name in spec.replicas:
        if name not in seen:
            raise UnknownFarm(f"Geoplex names unknown farm '{name}'", element=name)
    if spec.detection_delay < 0:
        raise InvalidValue("Geoplex detection delay must be >= 0", element='geoplex')


def _validate_farm(farm):
    names = set()
    for service in farm.services:
        path = f"{farm.name}/{service.name}"
        if service.name in names:
            raise DuplicateId(f"Service '{path}' is declared twice", element=path)
        names.add(service.name)
        _validate_service(path, service)

    for service in farm.services:
        if service.forwards_to is not None and service.forwards_to not in names:
            raise DanglingForward(
                f"Service '{farm.name}/{service.name}' forwards to unknown service "
                f"'{service.forwards_to}'",
                element=f"{farm.name}/{service.name}",
            )
    _check_forward_cycles(farm)


def _check_forward_cycles(farm):
    forwards = {service.name: service.forwards_to for service in farm.services}
    for start in forwards:
        visited = [start]
        current = forwards[start]
        while current is not None:
            if current in visited:
                chain = ' -> '.join(visited + [current])
                raise ForwardCycle(f"Forwarding cycle in farm '{farm.name}': {chain}", element=f"{farm.name}/{start}")
            visited.append(current)
            current = forwards[current]


def _validate_service(path, service):
    storage = service.storage
    if storage.is_shared_disk and storage.shared_store is None:
        raise SharedDiskWithoutStore(f"Shared-disk service '{path}' has no shared store", element=path)
    if storage.invalidation_cost < 0:
        raise InvalidValue(f"Invalidation cost of '{path}' must be >= 0", element=path)
    if service.state_size < 0:
        raise InvalidValue(f"State size of '{path}' must be >= 0", element=path)

    if service.is_racs:
        if not service.nodes:
            raise EmptyService(f"Cloned service '{path}' has no nodes", element=path)
        nodes = service.nodes
    else:
        if not service.packs:
            raise EmptyService(f"Partitioned service '{path}' has no packs", element=path)
        for pack in service.packs:
            if not pack.members:
                raise EmptyPack(f"Pack {pack.id} of '{path}' has no members", element=f"{path}/pack{pack.id}")
        nodes = service.all_nodes
        _check_partition_hosting(path, service)

    ids = set()
    for node in nodes:
        node_path = f"{path}/{node.name}"
        if node.id in ids:
            raise DuplicateId(f"Node id {node.id} appears twice in '{path}'", element=node_path)
        ids.add(node.id)
        _validate_node(node_path, node)
    if storage.shared_store is not None:
        _validate_node(f"{path}/store", storage.shared_store)


def _validate_node(path, node):
    if not node.service_rate > 0:
        raise InvalidValue(f"Node '{path}' needs a positive service rate", element=path)
    if node.disk_capacity < 0:
        raise InvalidValue(f"Node '{path}' has a negative disk capacity", element=path)
    if not 0 < node.degraded_rate_factor <= 1:
        raise InvalidValue(f"Degraded factor of '{path}' must be in (0, 1]", element=path)


def _check_partition_hosting(path, service):
    hosted = [partition for pack in service.packs for partition in pack.partitions_hosted]
    expected = set(range(len(hosted)))
    if len(set(hosted)) != len(hosted) or set(hosted) != expected:
        raise PartitionHosting(
            f"Partitions of '{path}' must be hosted by exactly one pack each and numbered 0..{len(hosted) - 1}",
            element=path,
        )


def _initial_partition_map(farm, service):
    path = f"{farm.name}/{service.name}"
    base = partition_map_init(service.bucket_count, service.partition_count)
    serving = {}
    for pack in service.packs:
        for partition, member in pack.initial_serving().items():
            serving[partition] = (pack.id, member)
    logger.debug("Initial partition map of %s: %s", path, base.bucket_counts())
    return PartitionMap(bucket_count=base.bucket_count, assignment=base.assignment, serving=serving)
