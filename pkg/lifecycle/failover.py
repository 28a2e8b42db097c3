"""
Pack failover: handing the partitions of a failed member to its survivors.
"""
import logging

from lifecycle.exceptions import NoSurvivor
from lifecycle.models import FailoverPlan

logger = logging.getLogger(__name__)


def assign_partitions(pack, partitions, survivors):
    """
    Spread ``partitions`` over ``survivors``.

    Active-passive packs give everything to the standby, the lowest-id
    survivor. Active-active packs give each partition, in ascending order,
    to the survivor currently serving the fewest (tie to the lowest id).
    """
    if pack.is_active_passive:
        return {partition: survivors[0] for partition in partitions}
    load = {member: pack.load_of(member) for member in survivors}
    assignments = {}
    for partition in partitions:
        target = min(survivors, key=lambda member: (load[member], member))
        assignments[partition] = target
        load[target] += 1
    return assignments


def pack_failover(pack, failed_member, t_detect):
    """
    Fail over the partitions ``failed_member`` was serving.

    The new owners are recorded as pending; they start serving at
    ``t_detect + takeover_time``.

    Returns:
        FailoverPlan: New owners and the takeover completion time

    Raises:
        NoSurvivor: If no member of the pack is up; the partitions stay
            unserved until a member is repaired
    """
    orphans = sorted(pack.lost.pop(failed_member, ()))
    takeover_at = t_detect + pack.takeover_time
    if not orphans:
        return FailoverPlan({}, takeover_at)

    survivors = pack.live_members()
    if not survivors:
        pack.stranded.update(orphans)
        raise NoSurvivor(
            f"Pack {pack.spec.id} has no survivor for partitions {orphans}"
        )

    assignments = assign_partitions(pack, orphans, survivors)
    pack.pending.update(assignments)
    logger.debug("Pack %s fails over %s at %d", pack.spec.id, assignments, takeover_at)
    return FailoverPlan(assignments, takeover_at)
