"""
Clone-set load balancers: the IP sprayer variants and the rendezvous sieve.
"""
from bisect import bisect_right
from functools import lru_cache

from core.utils import fnv1a_64, u64_le
from routing.exceptions import NoHealthyMember
from routing.models import BalancerVariant


def sprayer_pick(policy, members, cursor, queue_length=None):
    """
    Pick a member the way an external sprayer would.

    Args:
        policy (BalancerPolicy): Round robin or least queue
        members (list): Believed-healthy member ids, ascending
        cursor (BalancerCursor): Per-service state, updated with the pick
        queue_length (callable): Member id -> current queue length, needed
            by least queue

    Returns:
        int: Chosen member id

    Raises:
        NoHealthyMember: If ``members`` is empty
    """
    if not members:
        raise NoHealthyMember("No believed-healthy member to spray to")

    if policy.variant is BalancerVariant.SPRAYER_LEAST_QUEUE:
        chosen = members[0]
        shortest = queue_length(chosen)
        for member in members[1:]:
            length = queue_length(member)
            if length < shortest:
                chosen, shortest = member, length
    elif cursor.last_pick is None:
        chosen = members[0]
    else:
        index = bisect_right(members, cursor.last_pick)
        chosen = members[index] if index < len(members) else members[0]

    cursor.last_pick = chosen
    return chosen


@lru_cache(maxsize=4096)
def _member_prefix(member_id):
    return fnv1a_64(u64_le(member_id))


def rendezvous_weight(member_id, request_id):
    """FNV-1a 64 over ``member_id`` then ``request_id``, both 8-byte little-endian."""
    return fnv1a_64(u64_le(request_id), _member_prefix(member_id))


def sieve_pick(request_id, members):
    """
    Highest-random-weight pick: the member maximizing ``rendezvous_weight``.

    Ties go to the lowest id. The result depends only on the member set and
    the request id, so removing a member that was not chosen never changes
    the pick.

    Raises:
        NoHealthyMember: If ``members`` is empty
    """
    if not members:
        raise NoHealthyMember("No believed-healthy member for the sieve")
    chosen = None
    best = -1
    for member in members:
        weight = rendezvous_weight(member, request_id)
        if weight > best or (weight == best and member < chosen):
            chosen, best = member, weight
    return chosen


def balancer_pick(policy, members, cursor, request_id, queue_length=None):
    """Dispatch to the sprayer or the sieve according to ``policy``."""
    if policy.variant.is_sprayer:
        return sprayer_pick(policy, members, cursor, queue_length)
    return sieve_pick(request_id, members)
