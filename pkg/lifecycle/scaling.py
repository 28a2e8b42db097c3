"""
Online scale-out: new clones and new partitions.
"""
from bisect import insort

from core.utils import US_PER_SECOND, ceil_div, copy_duration_us
from engine.state import NodeRuntime
from lifecycle.exceptions import NotRacs, NotRaps
from lifecycle.models import BucketMove, NodeState, ReplicaSync
from topology.models import PackSpec


def add_clone(service, t, copy_rate, provision_time):
    """
    Create a new clone of a cloned service, Syncing until it has its data.

    The clone copies the first declared node and takes the next free id.
    A shared-nothing clone copies ``state_size`` bytes at ``copy_rate``; a
    shared-disk clone is stateless and only needs ``provision_time``.

    Returns:
        tuple: ``(NodeRuntime, ReplicaSync)``

    Raises:
        NotRacs: If the service is partitioned
    """
    spec = service.spec
    if not spec.is_racs:
        raise NotRacs(f"Cannot add a clone to partitioned service '{service.path}'")

    node_id = max(service.nodes) + 1 if service.nodes else 0
    node = NodeRuntime(
        spec.template_node.with_id(node_id), service.farm, service.name, spec.base_rate,
        state=NodeState.SYNCING, at=t,
    )
    if spec.storage.is_shared_disk:
        data_bytes, duration = 0, provision_time
    else:
        data_bytes = spec.state_size
        duration = copy_duration_us(spec.state_size, copy_rate)
    return node, ReplicaSync(copy_rate, data_bytes, t, t + duration)


def add_partition_pack(service, t, takeover_time, failback):
    """
    Add one partition hosted by a new pack cloned from the first pack.

    The new members are Healthy at once and the partition starts with no
    buckets; ``rebalance_partitions`` moves buckets onto it.

    Returns:
        tuple: ``(PackRuntime, partition id)``

    Raises:
        NotRaps: If the service is cloned
    """
    spec = service.spec
    if not spec.is_raps:
        raise NotRaps(f"Cannot add a partition to cloned service '{service.path}'")

    template = spec.packs[0]
    partition = len(service.serving)
    first_id = max(service.nodes) + 1
    members = tuple(member.with_id(first_id + index) for index, member in enumerate(template.members))
    pack_spec = PackSpec(
        id=max(pack.spec.id for pack in service.packs) + 1,
        members=members,
        mode=template.mode,
        storage_variant=template.storage_variant,
        partitions_hosted=(partition,),
    )
    for member in members:
        service.add_node(NodeRuntime(member, service.farm, service.name, spec.base_rate, at=t))
    service.serving[partition] = pack_spec.initial_serving()[partition]
    return service.add_pack(pack_spec, takeover_time, failback), partition


def plan_rebalance(assignment, partition_count):
    """
    Greedy bucket move plan.

    Repeatedly move the lowest-numbered bucket of the most loaded partition
    (tie to the lowest id) to the least loaded one, until bucket counts
    differ by at most one.

    Args:
        assignment (list): bucket -> partition
        partition_count (int): Partitions after the change

    Returns:
        list: ``BucketMove`` in execution order; empty when already balanced
    """
    owned = {partition: [] for partition in range(partition_count)}
    for bucket, partition in enumerate(assignment):
        owned[partition].append(bucket)

    moves = []
    partitions = range(partition_count)
    while True:
        most = max(partitions, key=lambda p: (len(owned[p]), -p))
        least = min(partitions, key=lambda p: (len(owned[p]), p))
        if len(owned[most]) - len(owned[least]) <= 1:
            return moves
        bucket = owned[most].pop(0)
        insort(owned[least], bucket)
        moves.append(BucketMove(bucket, most, least))


def rebalance_partitions(service, new_partition, t, copy_rate):
    """
    Plan the moves that spread buckets onto ``new_partition``.

    The plan is computed against the target assignment, so moves still in
    flight are taken into account. Every move copies ``state_size / B``
    bytes and completes at the same instant; until then the old owner keeps
    serving the bucket.

    Returns:
        tuple: ``(moves, completes_at)``

    Raises:
        NotRaps: If the service is cloned
    """
    spec = service.spec
    if not spec.is_raps:
        raise NotRaps(f"Cannot rebalance cloned service '{service.path}'")
    partition_count = max(len(service.serving), new_partition + 1)
    moves = plan_rebalance(service.target_assignment, partition_count)
    for move in moves:
        service.target_assignment[move.bucket] = move.destination
    duration = ceil_div(spec.state_size * US_PER_SECOND, service.bucket_count * copy_rate)
    return moves, t + duration
