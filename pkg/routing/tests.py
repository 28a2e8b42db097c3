from django.test import SimpleTestCase

from core.test_factories import (
    BalancerPolicyFactory,
    CloneServiceFactory,
    FarmSpecFactory,
    GeoplexSpecFactory,
    PartitionServiceFactory,
    SharedDiskCloneServiceFactory,
    WorkloadSpecFactory,
    scenario_event,
    single_service_topology,
)
from engine.models import RunSettings
from engine.simulation import Simulation
from metrics.statistics import write_amplification
from routing.balancers import rendezvous_weight, sieve_pick, sprayer_pick
from routing.exceptions import NoHealthyMember, NoLiveFarm, PartitionUnavailable
from routing.models import BalancerCursor, BalancerPolicy, BalancerVariant
from routing.router import affinity_route, plan_fanout, route_geoplex
from topology.builder import build_topology
from topology.models import GeoplexMode
from workload.generators import key_to_bucket
from workload.models import Request

ROUND_ROBIN = BalancerPolicy(BalancerVariant.SPRAYER_ROUND_ROBIN)
LEAST_QUEUE = BalancerPolicy(BalancerVariant.SPRAYER_LEAST_QUEUE)


def make_request(request_id=0, key=0, write=False, demand=100):
    return Request(request_id, key, write, 0, 1_000_000, demand)


class RouteGeoplexTestCase(SimpleTestCase):
    """Test cases for farm selection across the geoplex."""

    def simulation(self, mode):
        farms = (
            FarmSpecFactory(name='a', services=(CloneServiceFactory(name='web'),)),
            FarmSpecFactory(name='b', services=(CloneServiceFactory(name='web'),)),
        )
        topology = build_topology(GeoplexSpecFactory(farms=farms, mode=mode, replicas=('a', 'b')))
        return Simulation(topology, settings=RunSettings())

    def test_active_active_spreads_by_id(self):
        """Test that request 7 goes to the second of two live farms."""
        simulation = self.simulation(GeoplexMode.ACTIVE_ACTIVE)
        geoplex = simulation.topology.geoplex
        self.assertEqual(route_geoplex(make_request(7), geoplex, simulation.state), 'b')
        self.assertEqual(route_geoplex(make_request(8), geoplex, simulation.state), 'a')

    def test_active_passive_uses_first_live_farm(self):
        """Test that the passive replica only serves once the primary is dropped."""
        simulation = self.simulation(GeoplexMode.ACTIVE_PASSIVE)
        geoplex = simulation.topology.geoplex
        self.assertEqual(route_geoplex(make_request(7), geoplex, simulation.state), 'a')
        simulation.state.evict_farm('a')
        self.assertEqual(route_geoplex(make_request(7), geoplex, simulation.state), 'b')

    def test_no_live_farm(self):
        """Test that an empty geoplex view fails the request."""
        simulation = self.simulation(GeoplexMode.ACTIVE_ACTIVE)
        simulation.state.evict_farm('a')
        simulation.state.evict_farm('b')
        with self.assertRaises(NoLiveFarm):
            route_geoplex(make_request(1), simulation.topology.geoplex, simulation.state)

    def test_readmitted_farm_keeps_declared_order(self):
        """Test that a repaired farm goes back to its declared position."""
        simulation = self.simulation(GeoplexMode.ACTIVE_PASSIVE)
        simulation.state.evict_farm('a')
        simulation.state.admit_farm('a')
        self.assertEqual(simulation.state.geoplex_view, ['a', 'b'])


class SprayerPickTestCase(SimpleTestCase):
    """Test cases for the sprayer balancers."""

    def test_round_robin_starts_at_lowest(self):
        """Test that the first pick is the lowest member."""
        cursor = BalancerCursor()
        self.assertEqual(sprayer_pick(ROUND_ROBIN, [0, 1, 2], cursor), 0)
        self.assertEqual(cursor.last_pick, 0)

    def test_round_robin_next_after_last(self):
        """Test that the pick after 0 over [0, 1, 2] is 1."""
        self.assertEqual(sprayer_pick(ROUND_ROBIN, [0, 1, 2], BalancerCursor(last_pick=0)), 1)

    def test_round_robin_wraps(self):
        """Test that the pick after the highest member wraps to the lowest."""
        self.assertEqual(sprayer_pick(ROUND_ROBIN, [0, 1, 2], BalancerCursor(last_pick=2)), 0)

    def test_round_robin_skips_evicted_member(self):
        """Test that a last pick no longer listed still moves forward."""
        self.assertEqual(sprayer_pick(ROUND_ROBIN, [0, 2, 3], BalancerCursor(last_pick=1)), 2)

    def test_least_queue(self):
        """Test that the member with the shortest queue wins."""
        queues = {0: 3, 1: 1, 2: 2}
        self.assertEqual(sprayer_pick(LEAST_QUEUE, [0, 1, 2], BalancerCursor(), queues.get), 1)

    def test_least_queue_tie_to_lowest(self):
        """Test that equal queues go to the lowest id."""
        queues = {0: 2, 1: 2, 2: 2}
        self.assertEqual(sprayer_pick(LEAST_QUEUE, [0, 1, 2], BalancerCursor(), queues.get), 0)

    def test_no_members(self):
        """Test that an empty view is refused."""
        with self.assertRaises(NoHealthyMember):
            sprayer_pick(ROUND_ROBIN, [], BalancerCursor())


class SievePickTestCase(SimpleTestCase):
    """Test cases for the rendezvous sieve."""

    def test_single_member(self):
        """Test that a lone member is always chosen."""
        self.assertEqual({sieve_pick(request_id, [4]) for request_id in range(50)}, {4})

    def test_highest_weight_wins(self):
        """Test that the pick maximizes the rendezvous weight."""
        members = [0, 1, 2, 3]
        for request_id in range(50):
            chosen = sieve_pick(request_id, members)
            best = max(rendezvous_weight(member, request_id) for member in members)
            self.assertEqual(rendezvous_weight(chosen, request_id), best)

    def test_removing_other_member_keeps_pick(self):
        """Test that dropping a member that was not chosen never moves a request."""
        members = [0, 1, 2, 3, 4]
        for request_id in range(200):
            chosen = sieve_pick(request_id, members)
            others = [member for member in members if member != chosen]
            for removed in others:
                remaining = [member for member in members if member != removed]
                self.assertEqual(sieve_pick(request_id, remaining), chosen)

    def test_spreads_requests(self):
        """Test that every member gets some requests."""
        picks = {sieve_pick(request_id, [0, 1, 2]) for request_id in range(300)}
        self.assertEqual(picks, {0, 1, 2})

    def test_no_members(self):
        """Test that an empty view is refused."""
        with self.assertRaises(NoHealthyMember):
            sieve_pick(1, [])


class AffinityRouteTestCase(SimpleTestCase):
    """Test cases for partition affinity."""

    def setUp(self):
        """Set up a four-partition map over 64 buckets."""
        topology = single_service_topology(PartitionServiceFactory(partition_count=4))
        self.partition_map = topology.partition_map('f', 's')
        self.serving = {0: 0, 1: 1, 2: 2, 3: 3}

    def test_key_goes_to_partition_owner(self):
        """Test the bucket, partition and node of a key."""
        request = make_request(key=12_345)
        bucket = key_to_bucket(12_345, 64)
        hit = affinity_route(request, self.partition_map, self.serving)
        self.assertEqual(hit.bucket, bucket)
        self.assertEqual(hit.partition, bucket % 4)
        self.assertEqual(hit.node, bucket % 4)

    def test_unserved_partition(self):
        """Test that a partition without a server fails the request."""
        request = make_request(key=7)
        partition = self.partition_map.assignment[key_to_bucket(7, 64)]
        self.serving[partition] = None
        with self.assertRaises(PartitionUnavailable) as raised:
            affinity_route(request, self.partition_map, self.serving)
        self.assertEqual(raised.exception.partition, partition)


class PlanFanoutTestCase(SimpleTestCase):
    """Test cases for clone-set request planning."""

    def test_read_goes_to_one_member(self):
        """Test that a read is sent to the balancer's pick only."""
        decision = plan_fanout(make_request(), CloneServiceFactory(), [0, 1, 2], BalancerCursor())
        self.assertEqual(decision.nodes, (0,))
        self.assertEqual(decision.fanout, ())
        self.assertEqual(decision.write_amplification, 1)

    def test_write_fans_out_to_every_clone(self):
        """Test that a shared-nothing write reaches all three clones."""
        decision = plan_fanout(make_request(write=True), CloneServiceFactory(), [0, 1, 2], BalancerCursor())
        self.assertEqual(decision.fanout, (0, 1, 2))
        self.assertEqual(decision.write_amplification, 3)
        self.assertEqual(decision.store_cost, 0)

    def test_shared_disk_write(self):
        """Test that a shared-disk write costs the store the demand plus invalidations."""
        service = SharedDiskCloneServiceFactory(clone_count=4)
        decision = plan_fanout(make_request(write=True, demand=500), service, [0, 1, 2, 3], BalancerCursor())
        self.assertEqual(len(decision.nodes), 1)
        self.assertEqual(decision.fanout, ())
        self.assertEqual(decision.store_cost, 500 + 300)

    def test_forwarding_tier_treats_writes_as_reads(self):
        """Test that a non-terminal tier does not fan out."""
        decision = plan_fanout(
            make_request(write=True), CloneServiceFactory(), [0, 1, 2], BalancerCursor(), terminal=False,
        )
        self.assertEqual(decision.nodes, (0,))
        self.assertEqual(decision.fanout, ())

    def test_no_members(self):
        """Test that a write with no live clone is refused."""
        with self.assertRaises(NoHealthyMember):
            plan_fanout(make_request(write=True), CloneServiceFactory(), [], BalancerCursor())


class RequestFlowTestCase(SimpleTestCase):
    """Test cases for requests moving through small simulations."""

    def run_service(self, service, workloads, events=(), **settings):
        simulation = Simulation(single_service_topology(service), workloads, events, RunSettings(**settings))
        return simulation.run_until()

    def test_undetected_failure_fails_its_share(self):
        """Test that round robin keeps feeding a failed clone until detection."""
        service = CloneServiceFactory(clone_count=2, balancer=BalancerPolicyFactory(detection_delay=10_000_000))
        workload = WorkloadSpecFactory(duration=1_000_000)
        report = self.run_service(service, [workload], [scenario_event(0, 'fail_node', 'f', 's', 'n0')])
        # Requests 0, 2, 4, ... of the 999 land on n0
        self.assertEqual(report.scope('f/s').presented, 999)
        self.assertEqual(report.scope('f/s').failed, 500)
        self.assertEqual(report.scope('total').failed, 500)

    def test_retry_uses_another_member(self):
        """Test that retry sends requests for a dead clone elsewhere."""
        service = CloneServiceFactory(
            clone_count=2, retry=True, balancer=BalancerPolicyFactory(detection_delay=10_000_000),
        )
        workload = WorkloadSpecFactory(duration=1_000_000)
        report = self.run_service(service, [workload], [scenario_event(0, 'fail_node', 'f', 's', 'n0')])
        self.assertEqual(report.scope('f/s').failed, 0)
        self.assertEqual(report.scope('f/s').in_deadline, 999)

    def test_immediate_detection(self):
        """Test that a zero detection delay drops the clone at once."""
        workload = WorkloadSpecFactory(duration=1_000_000)
        report = self.run_service(
            CloneServiceFactory(clone_count=2), [workload], [scenario_event(0, 'fail_node', 'f', 's', 'n0')],
        )
        self.assertEqual(report.scope('f/s').failed, 0)
        self.assertEqual(report.nodes['f/s/n0'].busy_us, 0)

    def test_write_amplification_of_clones(self):
        """Test that writes to three clones run three times."""
        workload = WorkloadSpecFactory(read_fraction=0.0, duration=1_000_000)
        report = self.run_service(CloneServiceFactory(clone_count=3), [workload])
        self.assertEqual(write_amplification(report, 'f/s'), 3)
        self.assertEqual(report.nodes['f/s/n1'].writes, 999)

    def test_write_amplification_of_partitions(self):
        """Test that a partitioned write runs once."""
        workload = WorkloadSpecFactory(read_fraction=0.0, duration=1_000_000)
        report = self.run_service(PartitionServiceFactory(partition_count=4), [workload])
        self.assertEqual(write_amplification(report, 'f/s'), 1)

    def test_shared_store_down_fails_requests(self):
        """Test that a shared-disk service without its store serves nothing."""
        workload = WorkloadSpecFactory(duration=1_000_000)
        report = self.run_service(
            SharedDiskCloneServiceFactory(clone_count=2), [workload],
            [scenario_event(0, 'fail_node', 'f', 's', 'store')],
        )
        self.assertEqual(report.scope('f/s').failed, 999)

    def test_forwarding_chain(self):
        """Test that a request visits every tier and counts once per client."""
        farm = FarmSpecFactory(services=(
            CloneServiceFactory(name='web', clone_count=2, forwards_to='db'),
            PartitionServiceFactory(name='db', partition_count=2),
        ))
        topology = build_topology(GeoplexSpecFactory(farms=(farm,)))
        workload = WorkloadSpecFactory(target=('f', 'web'), duration=1_000_000)
        report = Simulation(topology, [workload], settings=RunSettings()).run_until()
        self.assertEqual(report.scope('total').presented, 999)
        self.assertEqual(report.scope('f/web').presented, 999)
        self.assertEqual(report.scope('f/db').presented, 999)
        self.assertEqual(report.scope('total').in_deadline, 999)
        # 100 µs at each of the two tiers
        self.assertEqual(min(report.scope('total').latencies), 200)
