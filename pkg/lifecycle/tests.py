from django.test import SimpleTestCase

from core.test_factories import (
    BalancerPolicyFactory,
    CloneServiceFactory,
    NodeSpecFactory,
    PartitionServiceFactory,
    SharedDiskCloneServiceFactory,
    WorkloadSpecFactory,
    scenario_event,
    single_service_topology,
)
from engine.models import RunSettings
from engine.simulation import Simulation
from engine.state import NodeRuntime
from engine.trace import TraceRecord
from lifecycle.controller import apply_fault
from lifecycle.exceptions import IllegalTransition, NoSurvivor, NotRacs, NotRaps, UnknownPath
from lifecycle.failover import pack_failover
from lifecycle.faults import raid_mask
from lifecycle.models import BucketMove, FailbackMode, MaskResult, NodeState
from lifecycle.scaling import add_clone, add_partition_pack, plan_rebalance, rebalance_partitions
from topology.models import PackMode, RaidLevel


def build(service, events=(), workloads=(), **settings):
    return Simulation(single_service_topology(service), workloads, events, RunSettings(**settings))


class RaidMaskTestCase(SimpleTestCase):
    """Test cases for disk fault masking."""

    def node(self, raid_level):
        return NodeRuntime(NodeSpecFactory(id=0, raid_level=raid_level), 'f', 's', 1000.0)

    def test_no_raid_exposes(self):
        """Test that a bare disk fault takes the node down."""
        event = scenario_event(0, 'fail_disk', 'f', 's', 'n0')
        self.assertEqual(raid_mask(event, self.node(RaidLevel.NONE)), MaskResult.EXPOSED)

    def test_first_fault_masked(self):
        """Test that raid1 and raid5 hide the first fault."""
        event = scenario_event(0, 'fail_disk', 'f', 's', 'n0')
        self.assertEqual(raid_mask(event, self.node(RaidLevel.RAID1)), MaskResult.MASKED)
        self.assertEqual(raid_mask(event, self.node(RaidLevel.RAID5)), MaskResult.MASKED)

    def test_second_fault_exposed(self):
        """Test that a fault on a Degraded node is exposed."""
        node = self.node(RaidLevel.RAID1)
        node.set_state(NodeState.DEGRADED, 0)
        self.assertEqual(raid_mask(scenario_event(1, 'fail_disk', 'f', 's', 'n0'), node), MaskResult.EXPOSED)

    def test_wrong_node(self):
        """Test that an event for another node is refused."""
        with self.assertRaises(ValueError):
            raid_mask(scenario_event(0, 'fail_disk', 'f', 's', 'n1'), self.node(RaidLevel.NONE))


class PackFailoverTestCase(SimpleTestCase):
    """Test cases for handing partitions to pack survivors."""

    def fail_member(self, service, node_id):
        pack = service.pack_of_node[node_id]
        service.nodes[node_id].set_state(NodeState.FAILED, 10)
        pack.lost[node_id] = set(pack.served_by(node_id))
        for partition in pack.lost[node_id]:
            service.serving[partition] = None
        return pack

    def test_active_passive_goes_to_standby(self):
        """Test that the standby takes the partition after the takeover time."""
        simulation = build(PartitionServiceFactory(partition_count=2, pack_size=2), takeover_time=5_000)
        service = simulation.state.service('f', 's')
        pack = self.fail_member(service, 0)
        plan = pack_failover(pack, 0, 100)
        self.assertEqual(plan.assignments, {0: 1})
        self.assertEqual(plan.takeover_at, 5_100)
        self.assertEqual(pack.pending, {0: 1})

    def test_active_active_spreads_to_least_loaded(self):
        """Test that each orphan goes to the survivor serving the fewest partitions."""
        service_spec = PartitionServiceFactory(
            partition_count=4, pack_size=3, pack_mode=PackMode.ACTIVE_ACTIVE, hosts=4,
        )
        service = build(service_spec).state.service('f', 's')
        # Partitions 0..3 start on members 0, 1, 2, 0
        self.assertEqual(service.serving, {0: 0, 1: 1, 2: 2, 3: 0})
        pack = self.fail_member(service, 0)
        plan = pack_failover(pack, 0, 0)
        self.assertEqual(plan.assignments, {0: 1, 3: 2})

    def test_no_survivor(self):
        """Test that a pack without live members strands its partitions."""
        service = build(PartitionServiceFactory(partition_count=2)).state.service('f', 's')
        pack = self.fail_member(service, 1)
        with self.assertRaises(NoSurvivor):
            pack_failover(pack, 1, 0)
        self.assertEqual(pack.stranded, {1})

    def test_nothing_to_fail_over(self):
        """Test that a member serving nothing yields an empty plan."""
        service = build(PartitionServiceFactory(partition_count=1, pack_size=2)).state.service('f', 's')
        pack = self.fail_member(service, 1)
        self.assertEqual(pack_failover(pack, 1, 0).assignments, {})


class PlanRebalanceTestCase(SimpleTestCase):
    """Test cases for the greedy bucket move plan."""

    def test_third_partition(self):
        """Test moving one bucket from each old partition onto the new one."""
        moves = plan_rebalance([0, 1, 0, 1, 0, 1], 3)
        self.assertEqual(moves, [BucketMove(0, 0, 2), BucketMove(1, 1, 2)])

    def test_balanced_plan_is_empty(self):
        """Test that a balanced assignment needs no moves."""
        self.assertEqual(plan_rebalance([0, 1, 0, 1], 2), [])
        self.assertEqual(plan_rebalance([0, 1, 0], 2), [])

    def test_result_is_balanced(self):
        """Test that counts differ by at most one after the moves."""
        assignment = [bucket % 3 for bucket in range(64)]
        for move in plan_rebalance(assignment, 5):
            self.assertEqual(assignment[move.bucket], move.source)
            assignment[move.bucket] = move.destination
        counts = [assignment.count(partition) for partition in range(5)]
        self.assertLessEqual(max(counts) - min(counts), 1)


class ScalingTestCase(SimpleTestCase):
    """Test cases for adding clones and partitions."""

    def test_add_clone_copies_state(self):
        """Test that 10 GB at 100 MB/s keeps the clone Syncing for 100 s."""
        service = build(CloneServiceFactory(clone_count=3, state_size=10 ** 10)).state.service('f', 's')
        node, sync = add_clone(service, 5, 10 ** 8, 1_000_000)
        self.assertEqual(node.id, 3)
        self.assertEqual(node.state, NodeState.SYNCING)
        self.assertFalse(node.up)
        self.assertEqual(sync.data_bytes, 10 ** 10)
        self.assertEqual(sync.completes_at, 5 + 100_000_000)

    def test_add_clone_shared_disk(self):
        """Test that a shared-disk clone only waits for provisioning."""
        service = build(SharedDiskCloneServiceFactory(state_size=10 ** 10)).state.service('f', 's')
        _, sync = add_clone(service, 0, 10 ** 8, 1_000_000)
        self.assertEqual(sync.data_bytes, 0)
        self.assertEqual(sync.completes_at, 1_000_000)

    def test_add_clone_to_partitions(self):
        """Test that a partitioned service refuses clones."""
        service = build(PartitionServiceFactory()).state.service('f', 's')
        with self.assertRaises(NotRacs):
            add_clone(service, 0, 10 ** 8, 1_000_000)

    def test_add_partition(self):
        """Test that a new pack hosts the next partition with no buckets yet."""
        service = build(PartitionServiceFactory(partition_count=2, bucket_count=6)).state.service('f', 's')
        pack, partition = add_partition_pack(service, 0, 1_000, FailbackMode.NONE)
        self.assertEqual(partition, 2)
        self.assertEqual(pack.spec.id, 2)
        self.assertEqual(service.serving[2], 2)
        self.assertNotIn(2, service.assignment)

    def test_rebalance_timing(self):
        """Test that every bucket move copies state_size / B bytes."""
        spec = PartitionServiceFactory(partition_count=2, bucket_count=6, state_size=6 * 10 ** 8)
        service = build(spec).state.service('f', 's')
        _, partition = add_partition_pack(service, 0, 1_000, FailbackMode.NONE)
        moves, completes_at = rebalance_partitions(service, partition, 10, 10 ** 8)
        self.assertEqual(len(moves), 2)
        self.assertEqual(completes_at, 10 + 1_000_000)
        self.assertEqual(service.target_assignment, [2, 2, 0, 1, 0, 1])
        self.assertEqual(service.assignment, [0, 1, 0, 1, 0, 1])

    def test_add_partition_to_clones(self):
        """Test that a cloned service refuses partitions."""
        service = build(CloneServiceFactory()).state.service('f', 's')
        with self.assertRaises(NotRaps):
            add_partition_pack(service, 0, 1_000, FailbackMode.NONE)


class LifecycleControllerTestCase(SimpleTestCase):
    """Test cases for scripted events applied during a run."""

    def test_fail_failed_node_warns(self):
        """Test that failing a Failed node is ignored with a warning."""
        events = [
            scenario_event(1_000, 'fail_node', 'f', 's', 'n0'),
            scenario_event(2_000, 'fail_node', 'f', 's', 'n0'),
        ]
        report = build(CloneServiceFactory(), events, until=10_000).run_until()
        self.assertEqual(report.warnings, ("2000 fail ignored: f/s/n0 is Failed",))

    def test_repair_healthy_node_warns(self):
        """Test that repairing a Healthy node is ignored with a warning."""
        report = build(CloneServiceFactory(), [scenario_event(5, 'repair_node', 'f', 's', 'n1')], until=10).run_until()
        self.assertEqual(report.warnings, ("5 repair ignored: f/s/n1 is Healthy",))

    def test_eviction_after_detection(self):
        """Test that the balancer keeps a failed clone until the detection delay ran out."""
        service = CloneServiceFactory(balancer=BalancerPolicyFactory(detection_delay=1_000_000))
        events = [scenario_event(0, 'fail_node', 'f', 's', 'n0')]

        early = build(service, events, until=999_999)
        early.run_until()
        self.assertEqual(early.state.service('f', 's').view, [0, 1, 2])

        late = build(service, events, until=1_000_000)
        late.run_until()
        self.assertEqual(late.state.service('f', 's').view, [1, 2])

    def test_repair_readmits(self):
        """Test that a repaired clone is back in the view and its downtime counted."""
        events = [
            scenario_event(1_000, 'fail_node', 'f', 's', 'n2'),
            scenario_event(4_000, 'repair_node', 'f', 's', 'n2'),
        ]
        simulation = build(CloneServiceFactory(), events, until=10_000)
        report = simulation.run_until()
        self.assertEqual(simulation.state.service('f', 's').view, [0, 1, 2])
        self.assertEqual(report.nodes['f/s/n2'].downtime_us, 3_000)
        self.assertEqual(report.nodes['f/s/n0'].downtime_us, 0)

    def test_illegal_transition(self):
        """Test that a Healthy node cannot be put to Syncing."""
        simulation = build(CloneServiceFactory())
        node = simulation.state.service('f', 's').nodes[0]
        with self.assertRaises(IllegalTransition):
            simulation.lifecycle.transition(node, NodeState.SYNCING, 0)

    def test_unknown_path(self):
        """Test that a fault on a missing node is refused."""
        simulation = build(CloneServiceFactory())
        with self.assertRaises(UnknownPath):
            apply_fault(simulation, scenario_event(0, 'fail_node', 'f', 's', 'n9'))

    def test_masked_disk_fault_degrades(self):
        """Test that a raid1 node runs Degraded after one disk fault and fails after two."""
        nodes = tuple(NodeSpecFactory(id=index, raid_level=RaidLevel.RAID1) for index in range(2))
        events = [
            scenario_event(1_000, 'fail_disk', 'f', 's', 'n0'),
            scenario_event(2_000, 'fail_disk', 'f', 's', 'n0'),
        ]
        simulation = build(CloneServiceFactory(nodes=nodes), events, until=10_000)
        simulation.run_until()
        node = simulation.state.service('f', 's').nodes[0]
        self.assertEqual(node.state_at(1_500), NodeState.DEGRADED)
        self.assertEqual(node.state, NodeState.FAILED)
        self.assertIn(TraceRecord(2_000, 'State', 'f/s/n0', 'Degraded->Failed cause=disk'), list(simulation.trace))

    def test_takeover_traced(self):
        """Test that an active-passive takeover is traced and moves ownership."""
        service = PartitionServiceFactory(partition_count=1, pack_size=2)
        events = [scenario_event(1_000_000, 'fail_node', 'f', 's', 'n0')]
        simulation = build(service, events, until=3_000_000, takeover_time=1_000_000)
        simulation.run_until()
        records = list(simulation.trace)
        self.assertIn(TraceRecord(1_000_000, 'NodeFail', 'f/s/n0'), records)
        self.assertIn(TraceRecord(1_000_000, 'Owner', 'f/s', 'p0 -'), records)
        self.assertIn(TraceRecord(2_000_000, 'TakeoverDone', 'f/s', 'p0 n1'), records)
        self.assertIn(TraceRecord(2_000_000, 'Owner', 'f/s', 'p0 n1'), records)
        self.assertEqual(simulation.state.service('f', 's').serving, {0: 1})

    def test_failback_on_repair(self):
        """Test that a repaired home member takes its partition back after a takeover."""
        service = PartitionServiceFactory(partition_count=1, pack_size=2)
        events = [
            scenario_event(1_000_000, 'fail_node', 'f', 's', 'n0'),
            scenario_event(3_000_000, 'repair_node', 'f', 's', 'n0'),
        ]
        simulation = build(
            service, events, until=5_000_000, takeover_time=1_000_000, failback=FailbackMode.ON_REPAIR,
        )
        simulation.run_until()
        self.assertIn(TraceRecord(4_000_000, 'TakeoverDone', 'f/s', 'p0 n0'), list(simulation.trace))
        self.assertEqual(simulation.state.service('f', 's').serving, {0: 0})

    def test_no_survivor_warns_and_repair_restores(self):
        """Test that a bare partition stays unserved until its node is repaired."""
        events = [
            scenario_event(1_000, 'fail_node', 'f', 's', 'n1'),
            scenario_event(5_000, 'repair_node', 'f', 's', 'n1'),
        ]
        simulation = build(PartitionServiceFactory(partition_count=2), events, until=10_000)
        report = simulation.run_until()
        self.assertEqual(len(report.warnings), 1)
        self.assertIn('no survivor', report.warnings[0])
        self.assertEqual(simulation.state.service('f', 's').serving, {0: 0, 1: 1})

    def test_add_clone_joins_after_sync(self):
        """Test that a new clone serves once its copy is done."""
        events = [scenario_event(0, 'add_clone', 'f', 's')]
        simulation = build(CloneServiceFactory(state_size=10 ** 6), events, until=100_000, copy_rate=10 ** 8)
        simulation.run_until()
        service = simulation.state.service('f', 's')
        self.assertEqual(service.view, [0, 1, 2, 3])
        self.assertEqual(service.nodes[3].state_at(9_999), NodeState.SYNCING)
        self.assertEqual(service.nodes[3].state_at(10_000), NodeState.HEALTHY)

    def test_site_failure(self):
        """Test that a site failure takes every node of the farm down and a repair brings them back."""
        events = [
            scenario_event(1_000, 'fail_site', 'f'),
            scenario_event(2_000, 'repair_site', 'f'),
        ]
        workload = WorkloadSpecFactory(duration=3_000)
        simulation = build(CloneServiceFactory(), events, [workload], until=3_000)
        report = simulation.run_until()
        for node_id in range(3):
            self.assertEqual(report.nodes[f'f/s/n{node_id}'].downtime_us, 1_000)
        # Arrivals at 1 ms and 2 ms; the scripted events win both ties
        self.assertEqual(report.scope('total').presented, 2)
        self.assertEqual(report.scope('total').failed, 1)
        self.assertEqual(report.scope('total').in_deadline, 1)
