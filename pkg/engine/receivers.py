"""
Trace writers for lifecycle signals.
"""
from django.dispatch import receiver

from core.signals import bucket_assignment_changed, node_state_changed, partition_owner_changed
from topology.models import node_name


@receiver(node_state_changed)
def trace_node_state(sender, simulation, at, node, previous, state, **kwargs):
    detail = f"{previous.value}->{state.value}" if previous is not None else state.value
    if node.cause:
        detail = f"{detail} cause={node.cause}"
    simulation.trace.record(at, 'State', node.path, detail)


@receiver(partition_owner_changed)
def trace_partition_owner(sender, simulation, at, service, partition, node, **kwargs):
    owner = node_name(node) if node is not None else '-'
    simulation.trace.record(at, 'Owner', service.path, f"p{partition} {owner}")


@receiver(bucket_assignment_changed)
def trace_bucket_assignment(sender, simulation, at, service, bucket, partition, **kwargs):
    simulation.trace.record(at, 'Bucket', service.path, f"b{bucket} p{partition}")
