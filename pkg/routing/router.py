"""
The three routing layers: geoplex farm selection, clone-set balancing with
write fan-out, and partition affinity.
"""
from routing.balancers import balancer_pick
from routing.exceptions import NoHealthyMember, NoLiveFarm, PartitionUnavailable
from routing.models import AffinityHit, RouteDecision
from topology.models import GeoplexMode
from workload.generators import key_to_bucket


def route_geoplex(req, geoplex, state):
    """
    Choose the farm of a geoplex-level request.

    Active-active spreads by ``req.id`` over the farms believed live;
    active-passive sends everything to the first live farm in declared
    order. Without a geoplex the request keeps the farm it already has.

    Raises:
        NoLiveFarm: If no replica farm is believed live
    """
    if geoplex.mode is GeoplexMode.NONE:
        return req.farm
    live = state.geoplex_view
    if not live:
        raise NoLiveFarm("No live farm in the geoplex")
    if geoplex.mode is GeoplexMode.ACTIVE_ACTIVE:
        return live[req.id % len(live)]
    return live[0]


def affinity_route(req, partition_map, serving):
    """
    Route a request to the member serving its key's partition.

    Args:
        req (Request): Request with a key
        partition_map: Anything with ``bucket_count`` and the current
            ``assignment`` list (bucket -> partition)
        serving (dict): Partition -> serving member id, ``None`` while
            the partition is unserved

    Returns:
        AffinityHit: bucket, partition and node

    Raises:
        PartitionUnavailable: If the partition has no serving member
    """
    bucket = key_to_bucket(req.key, partition_map.bucket_count)
    partition = partition_map.assignment[bucket]
    node = serving.get(partition)
    if node is None:
        raise PartitionUnavailable(partition)
    return AffinityHit(bucket, partition, node)


def plan_fanout(req, service, members, cursor, queue_length=None, terminal=True):
    """
    Plan the node work of a request at a cloned service.

    Reads go to one member chosen by the balancer. Writes at the terminal
    tier of a shared-nothing service go to every believed-healthy clone; on
    a shared-disk service they go to one member plus one shared-store
    operation of ``demand + invalidation_cost * (attached - 1)``. Forwarding
    tiers hold no state and treat writes like reads.

    Raises:
        NoHealthyMember: If ``members`` is empty
    """
    if req.write and terminal:
        if not service.storage.is_shared_disk:
            if not members:
                raise NoHealthyMember("No believed-healthy clone to write to")
            replicas = tuple(members)
            return RouteDecision(replicas, replicas)
        node = balancer_pick(service.balancer, members, cursor, req.id, queue_length)
        store_cost = req.demand + service.storage.invalidation_cost * (len(members) - 1)
        return RouteDecision((node,), (), store_cost)
    node = balancer_pick(service.balancer, members, cursor, req.id, queue_length)
    return RouteDecision((node,))
