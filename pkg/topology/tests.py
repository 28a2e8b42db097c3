from django.test import SimpleTestCase

from core.test_factories import (
    CloneServiceFactory,
    FarmSpecFactory,
    GeoplexSpecFactory,
    NodeSpecFactory,
    PartitionServiceFactory,
    single_service_topology,
)
from engine.models import RunSettings
from engine.rng import SplitMix64
from engine.simulation import Simulation
from lifecycle.models import NodeState
from lifecycle.scaling import add_clone
from topology.builder import build_topology
from topology.exceptions import (
    DanglingForward,
    DuplicateId,
    EmptyService,
    ForwardCycle,
    GeoplexTooSmall,
    InvalidCounts,
    InvalidValue,
    PartitionHosting,
    SharedDiskWithoutStore,
    UnknownFarm,
)
from topology.models import GeoplexMode, PackMode, PackSpec, StorageModel, StorageVariant
from topology.partitioning import partition_map_init
from topology.selectors import healthy_members


class BuildTopologyTestCase(SimpleTestCase):
    """Test cases for topology validation and construction."""

    def test_clone_set_of_three(self):
        """Test one farm with one cloned service of 3 clones."""
        topology = single_service_topology(CloneServiceFactory(clone_count=3))
        service = topology.service('f', 's')
        self.assertEqual(len(service.nodes), 3)
        self.assertEqual(topology.node_count, 3)
        self.assertEqual(topology.partition_maps, {})

    def test_partitioned_service_map(self):
        """Test 4 partitions in 2-member packs spreading 64 buckets evenly."""
        service = PartitionServiceFactory(partition_count=4, pack_size=2, bucket_count=64)
        topology = single_service_topology(service)
        partition_map = topology.partition_map('f', 's')
        self.assertEqual(partition_map.bucket_count, 64)
        self.assertEqual(partition_map.bucket_counts(), [16, 16, 16, 16])
        self.assertEqual(topology.node_count, 8)
        # Active-passive packs serve from their lowest member
        self.assertEqual(partition_map.serving, {0: (0, 0), 1: (1, 2), 2: (2, 4), 3: (3, 6)})

    def test_active_active_pack_spreads_partitions(self):
        """Test that an active-active pack starts with partitions spread over members."""
        service = PartitionServiceFactory(
            partition_count=4, pack_size=2, pack_mode=PackMode.ACTIVE_ACTIVE, hosts=2,
        )
        serving = single_service_topology(service).partition_map('f', 's').serving
        self.assertEqual(serving, {0: (0, 0), 1: (0, 1), 2: (1, 2), 3: (1, 3)})

    def test_dangling_forward(self):
        """Test that forwarding to a missing service is rejected."""
        service = CloneServiceFactory(forwards_to='db')
        with self.assertRaises(DanglingForward) as raised:
            single_service_topology(service)
        self.assertEqual(raised.exception.element, 'f/s')

    def test_forward_cycle(self):
        """Test that a forwarding cycle is rejected."""
        farm = FarmSpecFactory(services=(
            CloneServiceFactory(name='a', forwards_to='b'),
            CloneServiceFactory(name='b', forwards_to='a'),
        ))
        with self.assertRaises(ForwardCycle):
            build_topology(GeoplexSpecFactory(farms=(farm,)))

    def test_duplicate_service_and_farm(self):
        """Test that repeated names are rejected."""
        farm = FarmSpecFactory(services=(CloneServiceFactory(), CloneServiceFactory()))
        with self.assertRaises(DuplicateId):
            build_topology(GeoplexSpecFactory(farms=(farm,)))
        with self.assertRaises(DuplicateId):
            build_topology(GeoplexSpecFactory(farms=(FarmSpecFactory(), FarmSpecFactory())))

    def test_duplicate_node_id(self):
        """Test that two clones with one id are rejected."""
        service = CloneServiceFactory(nodes=(NodeSpecFactory(id=1), NodeSpecFactory(id=1)))
        with self.assertRaises(DuplicateId):
            single_service_topology(service)

    def test_empty_service(self):
        """Test that services without nodes or packs are rejected."""
        with self.assertRaises(EmptyService):
            single_service_topology(CloneServiceFactory(nodes=()))
        with self.assertRaises(EmptyService):
            single_service_topology(PartitionServiceFactory(packs=()))

    def test_shared_disk_needs_store(self):
        """Test that a shared-disk service without a store is rejected."""
        service = CloneServiceFactory(storage=StorageModel(variant=StorageVariant.SHARED_DISK))
        with self.assertRaises(SharedDiskWithoutStore):
            single_service_topology(service)

    def test_partition_hosted_twice(self):
        """Test that each partition must be hosted by exactly one pack."""
        packs = (
            PackSpec(id=0, members=(NodeSpecFactory(id=0),), partitions_hosted=(0,)),
            PackSpec(id=1, members=(NodeSpecFactory(id=1),), partitions_hosted=(0,)),
        )
        with self.assertRaises(PartitionHosting):
            single_service_topology(PartitionServiceFactory(packs=packs))

    def test_bad_node_values(self):
        """Test node rate and degraded factor checks."""
        with self.assertRaises(InvalidValue):
            single_service_topology(CloneServiceFactory(nodes=(NodeSpecFactory(id=0, service_rate=0),)))
        with self.assertRaises(InvalidValue):
            single_service_topology(CloneServiceFactory(nodes=(NodeSpecFactory(id=0, degraded_rate_factor=1.5),)))

    def test_too_few_buckets(self):
        """Test that a service with fewer buckets than partitions is rejected."""
        with self.assertRaises(InvalidCounts):
            single_service_topology(PartitionServiceFactory(partition_count=4, bucket_count=2))

    def test_geoplex_checks(self):
        """Test geoplex size and farm references."""
        with self.assertRaises(GeoplexTooSmall):
            build_topology(GeoplexSpecFactory(mode=GeoplexMode.ACTIVE_ACTIVE, replicas=('f',)))
        with self.assertRaises(UnknownFarm):
            build_topology(GeoplexSpecFactory(mode=GeoplexMode.ACTIVE_ACTIVE, replicas=('f', 'g')))

    def test_total_is_reserved(self):
        """Test that no farm may be called like the run-wide scope."""
        with self.assertRaises(InvalidValue):
            build_topology(GeoplexSpecFactory(farms=(FarmSpecFactory(name='total'),)))


class PartitionMapInitTestCase(SimpleTestCase):
    """Test cases for the round-robin bucket layout."""

    def test_six_buckets_two_partitions(self):
        """Test bucket b going to partition b mod P."""
        self.assertEqual(partition_map_init(6, 2).assignment, (0, 1, 0, 1, 0, 1))

    def test_six_buckets_three_partitions(self):
        """Test equal counts when P divides B."""
        self.assertEqual(partition_map_init(6, 3).bucket_counts(), [2, 2, 2])

    def test_counts_differ_by_at_most_one(self):
        """Test the balance property over uneven counts."""
        counts = partition_map_init(10, 4).bucket_counts()
        self.assertEqual(sum(counts), 10)
        self.assertLessEqual(max(counts) - min(counts), 1)

    def test_balance_over_random_counts(self):
        """Test the balance property for random B and P up to 256."""
        rng = SplitMix64(256)
        for _ in range(200):
            partitions = 1 + rng.below(256)
            buckets = partitions + rng.below(257 - partitions)
            with self.subTest(buckets=buckets, partitions=partitions):
                counts = partition_map_init(buckets, partitions).bucket_counts()
                self.assertEqual(len(counts), partitions)
                self.assertEqual(sum(counts), buckets)
                self.assertLessEqual(max(counts) - min(counts), 1)

    def test_fewer_buckets_than_partitions(self):
        """Test that B < P is rejected."""
        with self.assertRaises(InvalidCounts):
            partition_map_init(2, 3)
        with self.assertRaises(InvalidCounts):
            partition_map_init(4, 0)


class HealthyMembersTestCase(SimpleTestCase):
    """Test cases for the healthy-member query."""

    def setUp(self):
        """Set up a three-clone simulation holding 1 MB of state."""
        topology = single_service_topology(CloneServiceFactory(clone_count=3, state_size=10 ** 6))
        self.simulation = Simulation(topology, settings=RunSettings())
        self.service = self.simulation.state.service('f', 's')

    def test_all_healthy(self):
        """Test that every clone is listed when none failed."""
        self.assertEqual(healthy_members(('f', 's'), 0, self.simulation.state), [0, 1, 2])

    def test_failed_member_left_out(self):
        """Test that a failed clone is left out from the failure time on."""
        self.service.nodes[1].set_state(NodeState.FAILED, 5_000)
        state = self.simulation.state
        self.assertEqual(healthy_members(('f', 's'), 4_999, state), [0, 1, 2])
        self.assertEqual(healthy_members(('f', 's'), 5_000, state), [0, 2])

    def test_degraded_member_still_serves(self):
        """Test that a degraded clone is still healthy enough."""
        self.service.nodes[2].set_state(NodeState.DEGRADED, 10)
        self.assertEqual(healthy_members(('f', 's'), 10, self.simulation.state), [0, 1, 2])

    def test_syncing_clone_left_out(self):
        """Test that a new clone is left out while it syncs and listed once it joined."""
        node, sync = add_clone(self.service, 100, copy_rate=10 ** 8, provision_time=0)
        self.service.add_node(node)
        state = self.simulation.state
        self.assertEqual(node.state_at(100), NodeState.SYNCING)
        self.assertEqual(healthy_members(('f', 's'), 99, state), [0, 1, 2])
        self.assertEqual(healthy_members(('f', 's'), 100, state), [0, 1, 2])
        self.assertEqual(sync.completes_at, 10_100)

        node.set_state(NodeState.HEALTHY, sync.completes_at)
        self.assertEqual(healthy_members(('f', 's'), sync.completes_at - 1, state), [0, 1, 2])
        self.assertEqual(healthy_members(('f', 's'), sync.completes_at, state), [0, 1, 2, node.id])
