from django.test import SimpleTestCase, override_settings

from core.test_factories import (
    CloneServiceFactory,
    NodeSpecFactory,
    WorkloadSpecFactory,
    single_service_topology,
)
from core.utils import MASK64
from engine.events import EventKind
from engine.exceptions import NonPositiveRate, SimulationFinished, TimeTravel
from engine.models import RunSettings
from engine.queue import EventQueue
from engine.rng import GOLDEN_GAMMA, SplitMix64, exponential_us, rng_exponential, rng_next, rng_uniform01
from engine.simulation import Simulation
from engine.state import NodeRuntime
from engine.trace import TraceLog, TraceRecord
from lifecycle.models import FailbackMode, NodeState
from metrics.emitters import emit_report


def unshift_right(value, shift):
    """Inverse of ``value ^ (value >> shift)`` on 64 bits."""
    result = value
    for _ in range(64 // shift + 1):
        result = value ^ (result >> shift)
    return result


def state_before(value):
    """The state whose next SplitMix64 step outputs ``value``."""
    z = unshift_right(value, 31)
    z = unshift_right((z * pow(0x94D049BB133111EB, -1, 1 << 64)) & MASK64, 27)
    z = unshift_right((z * pow(0xBF58476D1CE4E5B9, -1, 1 << 64)) & MASK64, 30)
    return (z - GOLDEN_GAMMA) & MASK64


class EventQueueTestCase(SimpleTestCase):
    """Test cases for the event queue and the clock."""

    def setUp(self):
        """Set up an empty queue."""
        self.queue = EventQueue()

    def test_same_time_in_insertion_order(self):
        """Test that events at one instant are dispatched as scheduled."""
        self.queue.schedule(10, EventKind.ARRIVAL, 'first')
        self.queue.schedule(10, EventKind.NODE_FAIL, 'second')
        self.queue.schedule(5, EventKind.SAMPLE, 'earliest')
        seen = []
        self.queue.run(100, lambda event: seen.append(event.payload))
        self.assertEqual(seen, ['earliest', 'first', 'second'])

    def test_time_travel(self):
        """Test that scheduling before the clock is refused."""
        self.queue.schedule(50, EventKind.SAMPLE)
        self.queue.pop()
        with self.assertRaises(TimeTravel):
            self.queue.schedule(49, EventKind.SAMPLE)

    def test_single_event_advances_clock(self):
        """Test that dispatching moves the clock to the event time."""
        self.queue.schedule(1_000, EventKind.SAMPLE)
        dispatched = self.queue.run(2_000, lambda event: None)
        self.assertEqual(dispatched, 1)
        self.assertEqual(self.queue.now, 1_000)
        self.assertFalse(self.queue)

    def test_run_stops_at_until(self):
        """Test that later events stay queued."""
        self.queue.schedule(1_000, EventKind.SAMPLE)
        self.queue.schedule(3_000, EventKind.SAMPLE)
        self.assertEqual(self.queue.run(2_000, lambda event: None), 1)
        self.assertEqual(self.queue.peek_time(), 3_000)

    def test_handler_table(self):
        """Test dispatch through a kind-to-handler mapping."""
        seen = []
        self.queue.schedule(3, EventKind.SAMPLE, 'sample')
        self.queue.schedule(1, EventKind.ARRIVAL, 'arrival')
        handlers = {
            EventKind.ARRIVAL: lambda event: seen.append(('arrival', event.time, self.queue.now)),
            EventKind.SAMPLE: lambda event: seen.append(('sample', event.time, self.queue.now)),
        }
        self.assertEqual(self.queue.run(10, handlers), 2)
        self.assertEqual(seen, [('arrival', 1, 1), ('sample', 3, 3)])

    def test_events_scheduled_while_running(self):
        """Test that a handler may schedule events at the current instant."""
        seen = []

        def dispatch(event):
            seen.append(event.time)
            if event.payload == 'chain':
                self.queue.schedule(event.time, EventKind.SAMPLE)

        self.queue.schedule(7, EventKind.SAMPLE, 'chain')
        self.queue.run(7, dispatch)
        self.assertEqual(seen, [7, 7])


class SplitMix64TestCase(SimpleTestCase):
    """Test cases for the random stream."""

    def test_reference_values(self):
        """Test seed 0 against the reference SplitMix64 outputs."""
        first, state = rng_next(0)
        second, _ = rng_next(state)
        self.assertEqual(first, 0xE220A8397B1DCDAF)
        self.assertEqual(second, 0x6E789E6AA1B965F4)

    def test_purity(self):
        """Test that one state always gives the same value."""
        self.assertEqual(rng_next(12345), rng_next(12345))
        self.assertEqual(rng_uniform01(99), rng_uniform01(99))

    def test_wrapper_matches_functions(self):
        """Test that the engine wrapper walks the same stream."""
        rng = SplitMix64(0)
        self.assertEqual(rng.next_u64(), 0xE220A8397B1DCDAF)
        self.assertEqual(rng.next_u64(), 0x6E789E6AA1B965F4)

    def test_wrapper_draws_match_functions(self):
        """Test uniform and exponential draws of the wrapper against the pure functions."""
        rng = SplitMix64(42)
        state = 42
        for _ in range(200):
            u, state = rng_uniform01(state)
            self.assertEqual(rng.uniform01(), u)
            gap, state = rng_exponential(state, 250.0)
            self.assertEqual(rng.exponential(250.0), gap)
        self.assertEqual(rng.state, state)

    def test_uniform_in_unit_interval(self):
        """Test uniform draws stay in [0, 1)."""
        rng = SplitMix64(7)
        for _ in range(1_000):
            value = rng.uniform01()
            self.assertGreaterEqual(value, 0.0)
            self.assertLess(value, 1.0)

    def test_largest_draw_stays_below_one(self):
        """Test that the all-ones draw maps below 1 and still gives a finite gap."""
        state = state_before(MASK64)
        self.assertEqual(rng_next(state)[0], MASK64)

        u, _ = rng_uniform01(state)
        self.assertLess(u, 1.0)
        self.assertLess(SplitMix64(state).uniform01(), 1.0)
        gap, _ = rng_exponential(state, 100)
        self.assertGreater(gap, 1)

    def test_below(self):
        """Test bounded integers stay below the bound."""
        rng = SplitMix64(3)
        self.assertTrue(all(0 <= rng.below(6) < 6 for _ in range(1_000)))

    def test_exponential_examples(self):
        """Test the exponential gap rounding and clamp."""
        self.assertEqual(exponential_us(0.5, 100), 6_931)
        self.assertEqual(exponential_us(0.0, 100), 1)
        gap, state = rng_exponential(0, 100)
        self.assertGreaterEqual(gap, 1)
        self.assertNotEqual(state, 0)

    def test_non_positive_rate(self):
        """Test that a zero rate is refused."""
        with self.assertRaises(NonPositiveRate):
            exponential_us(0.5, 0)
        with self.assertRaises(NonPositiveRate):
            SplitMix64(1).exponential(-1)


class NodeRuntimeTestCase(SimpleTestCase):
    """Test cases for node service times and state history."""

    def test_service_time_scales_with_rate(self):
        """Test demand scaling against the service's base rate."""
        fast = NodeRuntime(NodeSpecFactory(id=0, service_rate=2000.0), 'f', 's', base_rate=1000.0)
        self.assertEqual(fast.service_time(1_000), 500)
        self.assertEqual(fast.service_time(1), 1)

    def test_degraded_node_is_slower(self):
        """Test that a degraded node runs at its degraded factor."""
        node = NodeRuntime(NodeSpecFactory(id=0, degraded_rate_factor=0.5), 'f', 's', base_rate=1000.0)
        self.assertEqual(node.service_time(1_000), 1_000)
        node.set_state(NodeState.DEGRADED, 10)
        self.assertEqual(node.service_time(1_000), 2_000)
        self.assertEqual(node.state_at(9), NodeState.HEALTHY)
        self.assertEqual(node.state_at(10), NodeState.DEGRADED)

    def test_store_costs_are_fixed(self):
        """Test that store work is not scaled by the store's rate."""
        store = NodeRuntime(NodeSpecFactory(id=-1, service_rate=5000.0), 'f', 's', 1000.0, fixed_cost=True)
        self.assertEqual(store.service_time(300), 300)
        self.assertEqual(store.path, 'f/s/store')


class RunSettingsTestCase(SimpleTestCase):
    """Test cases for run settings."""

    @override_settings(FARMSIM_TAKEOVER_TIME_US=7_000_000, FARMSIM_DEFAULT_SEED=11)
    def test_from_settings(self):
        """Test that Django settings seed the defaults and overrides win."""
        run = RunSettings.from_settings(seed=3, failback=FailbackMode.ON_REPAIR)
        self.assertEqual(run.takeover_time, 7_000_000)
        self.assertEqual(run.seed, 3)
        self.assertEqual(run.failback, FailbackMode.ON_REPAIR)
        self.assertEqual(RunSettings.from_settings(seed=None).seed, 11)

    def test_with_overrides_ignores_none(self):
        """Test that missing overrides keep the current value."""
        run = RunSettings(seed=5, until=10)
        self.assertEqual(run.with_overrides(seed=None, until=20), RunSettings(seed=5, until=20))


class TraceLogTestCase(SimpleTestCase):
    """Test cases for the trace log."""

    def test_render_and_parse(self):
        """Test that rendered records parse back."""
        trace = TraceLog()
        trace.record(0, 'Owner', 'f/s', 'p0 n0')
        trace.record(5, 'NodeFail', 'f/s/n0')
        text = trace.render()
        self.assertEqual(text, "0 Owner f/s p0 n0\n5 NodeFail f/s/n0\n")
        self.assertEqual(TraceLog.parse(text), [
            TraceRecord(0, 'Owner', 'f/s', 'p0 n0'),
            TraceRecord(5, 'NodeFail', 'f/s/n0'),
        ])

    def test_empty_trace(self):
        """Test that an empty trace renders to nothing."""
        self.assertEqual(TraceLog().render(), '')


class SimulationRunTestCase(SimpleTestCase):
    """Test cases for running a simulation end to end."""

    def setUp(self):
        """Set up a three-clone service."""
        self.topology = single_service_topology(CloneServiceFactory(clone_count=3))

    def test_empty_scenario(self):
        """Test that a run without workloads presents nothing."""
        report = Simulation(self.topology, settings=RunSettings(until=1_000_000)).run_until()
        self.assertEqual(report.scope('total').presented, 0)
        self.assertEqual(report.duration_us, 1_000_000)
        self.assertEqual(emit_report(report, 'csv').decode().count('\n'), 1)

    def test_zero_end_time(self):
        """Test that t_end = 0 dispatches nothing."""
        simulation = Simulation(self.topology, [WorkloadSpecFactory()], settings=RunSettings())
        report = simulation.run_until(0)
        self.assertEqual(report.duration_us, 0)
        self.assertEqual(simulation.dispatched, 0)
        self.assertEqual(report.scope('total').presented, 0)

    def test_default_until_is_workload_end(self):
        """Test that the run ends with the last workload window."""
        simulation = Simulation(self.topology, [WorkloadSpecFactory(duration=2_000_000)], settings=RunSettings())
        report = simulation.run_until()
        self.assertEqual(report.duration_us, 2_000_000)
        # Fixed arrivals every 1 ms strictly inside the window
        self.assertEqual(report.scope('total').presented, 1_999)
        self.assertEqual(report.scope('total').in_deadline, 1_999)

    def test_single_shot(self):
        """Test that a finished simulation cannot run again."""
        simulation = Simulation(self.topology, settings=RunSettings(until=10))
        simulation.run_until()
        with self.assertRaises(SimulationFinished):
            simulation.run_until()

    def test_same_seed_same_report(self):
        """Test that two runs with one seed give identical report bytes."""
        workload = WorkloadSpecFactory(read_fraction=0.7, duration=3_000_000)

        def run():
            simulation = Simulation(self.topology, [workload], settings=RunSettings(seed=9, trace=True))
            report = simulation.run_until()
            return emit_report(report, 'csv'), simulation.trace.render()

        self.assertEqual(run(), run())

    def test_queue_samples_per_window(self):
        """Test that queue lengths are sampled once per window."""
        report = Simulation(self.topology, settings=RunSettings(until=5_000_000)).run_until()
        self.assertEqual(len(report.nodes['f/s/n0'].queue_samples), 5)
