"""
Lifecycle domain types: node states, pack runtime state and the scripted
scenario events that drive faults and scaling.
"""
from dataclasses import dataclass, field
from enum import Enum

from engine.events import EventKind
from topology.models import PackMode, StorageVariant


class NodeState(str, Enum):
    HEALTHY = 'Healthy'
    DEGRADED = 'Degraded'
    FAILED = 'Failed'
    SYNCING = 'Syncing'

    @property
    def is_serving(self):
        return self is NodeState.HEALTHY or self is NodeState.DEGRADED


LEGAL_TRANSITIONS = frozenset({
    (NodeState.HEALTHY, NodeState.FAILED),
    (NodeState.HEALTHY, NodeState.DEGRADED),
    (NodeState.DEGRADED, NodeState.HEALTHY),
    (NodeState.DEGRADED, NodeState.FAILED),
    (NodeState.FAILED, NodeState.HEALTHY),
    (NodeState.SYNCING, NodeState.HEALTHY),
})


class FailbackMode(str, Enum):
    NONE = 'none'
    ON_REPAIR = 'on_repair'


class MaskResult(str, Enum):
    MASKED = 'Masked'
    EXPOSED = 'Exposed'


class ScenarioAction(str, Enum):
    FAIL_NODE = 'fail_node'
    REPAIR_NODE = 'repair_node'
    FAIL_DISK = 'fail_disk'
    REPAIR_DISK = 'repair_disk'
    FAIL_SITE = 'fail_site'
    REPAIR_SITE = 'repair_site'
    ADD_CLONE = 'add_clone'
    ADD_PARTITION = 'add_partition'

    @property
    def event_kind(self):
        return _ACTION_EVENTS[self]

    @property
    def path_depth(self):
        """Number of path segments the action targets."""
        if self in (ScenarioAction.FAIL_SITE, ScenarioAction.REPAIR_SITE):
            return 1
        if self in (ScenarioAction.ADD_CLONE, ScenarioAction.ADD_PARTITION):
            return 2
        return 3


_ACTION_EVENTS = {
    ScenarioAction.FAIL_NODE: EventKind.NODE_FAIL,
    ScenarioAction.REPAIR_NODE: EventKind.NODE_REPAIR,
    ScenarioAction.FAIL_DISK: EventKind.DISK_FAIL,
    ScenarioAction.REPAIR_DISK: EventKind.DISK_REPAIR,
    ScenarioAction.FAIL_SITE: EventKind.SITE_FAIL,
    ScenarioAction.REPAIR_SITE: EventKind.SITE_REPAIR,
    ScenarioAction.ADD_CLONE: EventKind.ADD_CLONE,
    ScenarioAction.ADD_PARTITION: EventKind.ADD_PARTITION,
}


@dataclass(frozen=True)
class ScenarioEvent:
    """A scripted fault, repair or scaling step at simulated time ``at``."""

    at: int
    action: ScenarioAction
    path: tuple

    @property
    def target(self):
        return '/'.join(self.path)


@dataclass(frozen=True)
class ReplicaSync:
    """Copy of a clone's state, or of one bucket, at ``copy_rate`` bytes/s."""

    copy_rate: int
    data_bytes: int
    started_at: int
    completes_at: int


@dataclass(frozen=True)
class FailoverPlan:
    """Partitions handed to survivors, effective at ``takeover_at``."""

    assignments: dict
    takeover_at: int


@dataclass(frozen=True)
class BucketMove:
    bucket: int
    source: int
    destination: int


@dataclass
class PackRuntime:
    """
    Mutable state of one pack during a run.

    ``serving`` is the service-wide partition table shared by every pack of
    the service; a pack only ever touches its ``hosted`` partitions.
    ``lost`` holds partitions a failed member served until failover runs,
    ``stranded`` those no survivor could take, ``pending`` the takeovers in
    progress.
    """

    spec: object
    members: dict
    serving: dict
    hosted: list
    home: dict
    detection_delay: int
    takeover_time: int
    failback: FailbackMode = FailbackMode.NONE
    pending: dict = field(default_factory=dict)
    lost: dict = field(default_factory=dict)
    stranded: set = field(default_factory=set)
    exposed_by: int = None

    @property
    def pool_exposed(self):
        """True while an exposed disk fault has taken the shared disk pool out."""
        return self.exposed_by is not None

    @property
    def mode(self):
        return self.spec.mode

    @property
    def is_active_passive(self):
        return self.spec.mode is PackMode.ACTIVE_PASSIVE

    @property
    def shares_disk(self):
        return self.spec.storage_variant is StorageVariant.SHARED_DISK

    def live_members(self):
        """Member ids able to take partitions, ascending."""
        return sorted(node_id for node_id, node in self.members.items() if node.up)

    def load_of(self, node_id):
        """Partitions served by or being handed to ``node_id``."""
        served = sum(1 for partition in self.hosted if self.serving.get(partition) == node_id)
        return served + sum(1 for target in self.pending.values() if target == node_id)

    def served_by(self, node_id):
        return [partition for partition in self.hosted if self.serving.get(partition) == node_id]
