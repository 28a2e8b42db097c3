"""
Lifecycle controller: applies scripted faults, repairs and scaling steps to
a running simulation and drives the failover timers they trigger.
"""
import logging

from core.signals import bucket_assignment_changed, node_state_changed, partition_owner_changed
from engine.events import EventKind
from lifecycle.exceptions import IllegalTransition, NoSurvivor, UnknownPath
from lifecycle.failover import assign_partitions, pack_failover
from lifecycle.faults import raid_mask
from lifecycle.models import LEGAL_TRANSITIONS, FailbackMode, MaskResult, NodeState, ScenarioAction
from lifecycle.scaling import add_clone, add_partition_pack, rebalance_partitions
from topology.models import STORE_NAME

logger = logging.getLogger(__name__)

CAUSE_DISK = 'disk'
CAUSE_SITE = 'site'


class LifecycleController:
    """
    Owns every node, pack and geoplex state change of one simulation.

    The controller reads the simulation's ``state``, ``queue``, ``settings``
    and ``flow``, and reports problems that do not stop the run into
    ``simulation.warnings``.
    """

    def __init__(self, simulation):
        self.simulation = simulation
        self.state = simulation.state
        self.queue = simulation.queue
        self.settings = simulation.settings
        self._actions = {
            ScenarioAction.FAIL_NODE: self.on_fail_node,
            ScenarioAction.REPAIR_NODE: self.on_repair_node,
            ScenarioAction.FAIL_DISK: self.on_fail_disk,
            ScenarioAction.REPAIR_DISK: self.on_repair_disk,
            ScenarioAction.FAIL_SITE: self.on_fail_site,
            ScenarioAction.REPAIR_SITE: self.on_repair_site,
            ScenarioAction.ADD_CLONE: self.on_add_clone,
            ScenarioAction.ADD_PARTITION: self.on_add_partition,
        }

    def apply(self, scenario_event):
        """Apply one scripted event at the current clock."""
        logger.debug("%d %s %s", self.queue.now, scenario_event.action.value, scenario_event.target)
        self._actions[scenario_event.action](scenario_event, self.queue.now)

    def warn(self, t, message):
        logger.warning("%d %s", t, message)
        self.simulation.warnings.append(f"{t} {message}")

    # Path resolution

    def resolve_farm(self, path):
        farm = self.state.farm(path[0])
        if farm is None:
            raise UnknownPath('/'.join(path))
        return farm

    def resolve_service(self, path):
        service = self.state.service(path[0], path[1]) if len(path) >= 2 else None
        if service is None:
            raise UnknownPath('/'.join(path))
        return service

    def resolve_node(self, path):
        """``(farm, service, 'n<id>' | 'store')`` -> ``(ServiceRuntime, NodeRuntime)``."""
        service = self.resolve_service(path)
        name = path[2] if len(path) == 3 else ''
        if name == STORE_NAME and service.store is not None:
            return service, service.store
        if name.startswith('n') and name[1:].isdigit():
            node = service.nodes.get(int(name[1:]))
            if node is not None:
                return service, node
        raise UnknownPath('/'.join(path))

    # State changes and their broadcasts

    def transition(self, node, state, t, cause=None):
        """
        Move ``node`` to ``state`` at ``t``.

        Raises:
            IllegalTransition: If the move is not one the state machine allows
        """
        previous = node.state
        if (previous, state) not in LEGAL_TRANSITIONS:
            raise IllegalTransition(node.path, previous, state)
        node.cause = cause if state is NodeState.FAILED else None
        node.set_state(state, t)
        node_state_changed.send(
            sender=self.__class__, simulation=self.simulation, at=t,
            node=node, previous=previous, state=state,
        )

    def announce_node(self, node, t):
        """Broadcast a node that starts existing at ``t``."""
        node_state_changed.send(
            sender=self.__class__, simulation=self.simulation, at=t,
            node=node, previous=None, state=node.state,
        )

    def set_owner(self, service, partition, node_id, t):
        if service.serving.get(partition, -1) == node_id:
            return
        service.serving[partition] = node_id
        partition_owner_changed.send(
            sender=self.__class__, simulation=self.simulation, at=t,
            service=service, partition=partition, node=node_id,
        )

    # Node faults

    def on_fail_node(self, scenario_event, t):
        service, node = self.resolve_node(scenario_event.path)
        self.fail_node(service, node, t)

    def fail_node(self, service, node, t, cause=None):
        """
        Take a node down: its work is lost and its partitions go unserved.

        The balancer, or the pack, notices after the service's detection
        delay; with a zero delay detection happens at once.
        """
        if node.state is NodeState.FAILED or node.state is NodeState.SYNCING:
            self.warn(t, f"fail ignored: {node.path} is {node.state.value}")
            return

        self.transition(node, NodeState.FAILED, t, cause)
        node.fail_seq += 1
        self.simulation.flow.abort_node(node, t)

        if node is service.store:
            return
        if service.is_raps:
            self._orphan(service, service.pack_of_node[node.id], node, t)

        delay = service.detection_delay
        if delay == 0:
            self._detected(service, node, t)
        else:
            self.queue.schedule(t + delay, EventKind.FAILURE_DETECTED, (service, node.id, node.fail_seq))

    def _orphan(self, service, pack, node, t):
        """Unserve what ``node`` served or was about to take over."""
        lost = set(pack.served_by(node.id))
        lost.update(partition for partition, target in pack.pending.items() if target == node.id)
        for partition in sorted(lost):
            pack.pending.pop(partition, None)
            self.set_owner(service, partition, None, t)
        pack.lost[node.id] = lost

    def on_failure_detected(self, payload):
        service, node_id, fail_seq = payload
        node = service.nodes[node_id]
        if node.fail_seq != fail_seq or node.up:
            return
        self._detected(service, node, self.queue.now)

    def _detected(self, service, node, t):
        if not service.is_raps:
            service.evict(node.id)
            return

        pack = service.pack_of_node[node.id]
        if pack.pool_exposed:
            pack.lost.pop(node.id, None)
            return
        try:
            plan = pack_failover(pack, node.id, t)
        except NoSurvivor as error:
            self.warn(t, f"{service.path}: {error}")
            return
        for partition, target in sorted(plan.assignments.items()):
            self.queue.schedule(plan.takeover_at, EventKind.TAKEOVER_DONE, (service, pack, partition, target))

    def on_takeover_done(self, payload):
        service, pack, partition, target = payload
        if pack.pending.get(partition) != target:
            return
        del pack.pending[partition]
        self.set_owner(service, partition, target, self.queue.now)

    # Node repairs

    def on_repair_node(self, scenario_event, t):
        service, node = self.resolve_node(scenario_event.path)
        self.repair_node(service, node, t)

    def repair_node(self, service, node, t):
        """Bring a node back Healthy; a repair also replaces failed disks."""
        if node.state is NodeState.DEGRADED:
            node.disk_faults = 0
            self.transition(node, NodeState.HEALTHY, t)
            return
        if node.state is not NodeState.FAILED:
            self.warn(t, f"repair ignored: {node.path} is {node.state.value}")
            return

        node.disk_faults = 0
        self.transition(node, NodeState.HEALTHY, t)
        if node is service.store:
            return
        if not service.is_raps:
            service.admit(node.id)
            return

        pack = service.pack_of_node[node.id]
        if pack.exposed_by == node.id:
            self._restore_pool(service, pack, t)
        else:
            self._rejoin_pack(service, pack, node, t)

    def _rejoin_pack(self, service, pack, node, t):
        if pack.pool_exposed:
            return

        # Whatever was never failed over comes straight back
        reclaimed = pack.lost.pop(node.id, set()) | pack.stranded
        pack.stranded.clear()
        for partition in sorted(reclaimed):
            pack.pending.pop(partition, None)
            self.set_owner(service, partition, node.id, t)

        if pack.failback is not FailbackMode.ON_REPAIR:
            return
        takeover_at = t + pack.takeover_time
        for partition in pack.hosted:
            if pack.home.get(partition) != node.id or service.serving.get(partition) == node.id:
                continue
            self.set_owner(service, partition, None, t)
            pack.pending[partition] = node.id
            self.queue.schedule(takeover_at, EventKind.TAKEOVER_DONE, (service, pack, partition, node.id))

    def _restore_pool(self, service, pack, t):
        """Serve a shared-disk pack's partitions again once its disks are back."""
        pack.exposed_by = None
        pack.lost.clear()
        pack.pending.clear()
        survivors = pack.live_members()
        if not survivors:
            pack.stranded.update(pack.hosted)
            return
        pack.stranded.clear()
        for partition, target in sorted(assign_partitions(pack, sorted(pack.hosted), survivors).items()):
            self.set_owner(service, partition, target, t)

    # Disks

    def on_fail_disk(self, scenario_event, t):
        service, node = self.resolve_node(scenario_event.path)
        if node.state is NodeState.FAILED or node.state is NodeState.SYNCING:
            node.disk_faults += 1
            logger.info("%d disk fault on %s node %s", t, node.state.value, node.path)
            return

        node.disk_faults += 1
        if raid_mask(scenario_event, node) is MaskResult.MASKED:
            self.transition(node, NodeState.DEGRADED, t)
            return

        pack = service.pack_of_node.get(node.id) if service.is_raps and node is not service.store else None
        if pack is not None and pack.shares_disk:
            self._expose_pool(service, pack, node, t)
        self.fail_node(service, node, t, cause=CAUSE_DISK)

    def _expose_pool(self, service, pack, node, t):
        """An exposed disk takes the whole pool of a shared-disk pack out."""
        pack.exposed_by = node.id
        pack.pending.clear()
        pack.lost.clear()
        for partition in pack.hosted:
            self.set_owner(service, partition, None, t)
        logger.info("%d %s: disk pool of pack %s exposed by %s", t, service.path, pack.spec.id, node.name)

    def on_repair_disk(self, scenario_event, t):
        service, node = self.resolve_node(scenario_event.path)
        if node.state is NodeState.DEGRADED:
            node.disk_faults = 0
            self.transition(node, NodeState.HEALTHY, t)
        elif node.state is NodeState.FAILED and node.cause == CAUSE_DISK:
            self.repair_node(service, node, t)
        else:
            self.warn(t, f"disk repair ignored: {node.path} is {node.state.value}")

    # Sites and the geoplex

    def on_fail_site(self, scenario_event, t):
        farm = self.resolve_farm(scenario_event.path)
        if farm.site_failed:
            self.warn(t, f"site fail ignored: {farm.name} is already down")
            return

        farm.site_failed = True
        farm.site_epoch += 1
        for service in farm.services.values():
            for node in service.all_node_runtimes():
                if node.state is not NodeState.FAILED and node.state is not NodeState.SYNCING:
                    self.fail_node(service, node, t, cause=CAUSE_SITE)

        if farm.name not in self.state.replicas:
            return
        if self.state.geoplex_detect == 0:
            self.state.evict_farm(farm.name)
        else:
            self.queue.schedule(
                t + self.state.geoplex_detect, EventKind.GEOPLEX_DETECTED, (farm, farm.site_epoch),
            )

    def on_geoplex_detected(self, payload):
        farm, site_epoch = payload
        if farm.site_failed and farm.site_epoch == site_epoch:
            self.state.evict_farm(farm.name)
            logger.info("%d geoplex drops farm %s", self.queue.now, farm.name)

    def on_repair_site(self, scenario_event, t):
        farm = self.resolve_farm(scenario_event.path)
        if not farm.site_failed:
            self.warn(t, f"site repair ignored: {farm.name} is up")
            return

        farm.site_failed = False
        farm.site_epoch += 1
        for service in farm.services.values():
            for node in service.all_node_runtimes():
                if node.state is NodeState.FAILED:
                    self.repair_node(service, node, t)
        self.state.admit_farm(farm.name)

    # Scaling

    def on_add_clone(self, scenario_event, t):
        service = self.resolve_service(scenario_event.path)
        node, sync = add_clone(service, t, self.settings.copy_rate, self.settings.provision_time)
        service.add_node(node)
        self.announce_node(node, t)
        self.queue.schedule(sync.completes_at, EventKind.CLONE_JOINED, (service, node.id))
        logger.info("%d %s: clone %s joins at %d", t, service.path, node.name, sync.completes_at)

    def on_clone_joined(self, payload):
        service, node_id = payload
        node = service.nodes[node_id]
        if node.state is not NodeState.SYNCING:
            return
        self.transition(node, NodeState.HEALTHY, self.queue.now)
        service.admit(node_id)

    def on_add_partition(self, scenario_event, t):
        service = self.resolve_service(scenario_event.path)
        if service.is_raps and service.partition_count >= service.bucket_count:
            self.warn(t, f"add_partition ignored: {service.path} already has one partition per bucket")
            return

        pack, partition = add_partition_pack(service, t, self.settings.takeover_time, self.settings.failback)
        for node in pack.members.values():
            self.announce_node(node, t)
        partition_owner_changed.send(
            sender=self.__class__, simulation=self.simulation, at=t,
            service=service, partition=partition, node=service.serving[partition],
        )

        moves, completes_at = rebalance_partitions(service, partition, t, self.settings.copy_rate)
        for move in moves:
            self.queue.schedule(completes_at, EventKind.BUCKET_MOVE_DONE, (service, move))
        logger.info("%d %s: partition %d added, %d bucket moves done at %d",
                    t, service.path, partition, len(moves), completes_at)

    def on_bucket_move_done(self, payload):
        service, move = payload
        service.assignment[move.bucket] = move.destination
        bucket_assignment_changed.send(
            sender=self.__class__, simulation=self.simulation, at=self.queue.now,
            service=service, bucket=move.bucket, partition=move.destination,
        )


def apply_fault(simulation, scenario_event):
    """
    Apply a scripted fault, repair or scaling step to ``simulation`` now.

    Raises:
        UnknownPath: If the event's path names nothing in the running topology
    """
    simulation.lifecycle.apply(scenario_event)
