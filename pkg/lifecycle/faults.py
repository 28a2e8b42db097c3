"""
Storage fault masking.
"""
from lifecycle.models import MaskResult, NodeState


def raid_mask(disk_event, node):
    """
    Decide whether a disk fault is hidden by the node's RAID level.

    Without RAID every disk fault is exposed. A duplexed (raid1) or parity
    protected (raid5) node masks the first fault and runs Degraded; a second
    fault while Degraded is exposed.

    Args:
        disk_event (ScenarioEvent): The ``fail_disk`` event
        node (NodeRuntime): Node the event targets

    Returns:
        MaskResult: ``MASKED`` or ``EXPOSED``
    """
    if disk_event.path and disk_event.path[-1] != node.name:
        raise ValueError(f"Disk event for '{disk_event.target}' does not target {node.path}")
    if not node.spec.raid_level.masks_single_fault:
        return MaskResult.EXPOSED
    if node.state is NodeState.DEGRADED:
        return MaskResult.EXPOSED
    return MaskResult.MASKED
