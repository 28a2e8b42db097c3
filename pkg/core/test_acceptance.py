"""
End-to-end checks of the simulator against analytic expectations.

Each scenario is written in the DSL, loaded and run; the expected values
come from window arithmetic on the fault script.
"""
from collections import Counter
from fractions import Fraction
from textwrap import dedent

from django.test import SimpleTestCase

from engine.simulation import Simulation
from metrics.audit import audit_bucket_ownership
from metrics.emitters import emit_report
from metrics.statistics import availability, throughput
from scenarios.loader import load_scenario
from scenarios.parser import BUNDLED, bundled_scenarios, parse_scenario
from scenarios.runner import run_loaded


def load(text, **overrides):
    return load_scenario(parse_scenario(dedent(text)), **overrides)


def run(text, **overrides):
    until = overrides.pop('until', None)
    return run_loaded(load(text, **overrides), until=until).report


def simulate(text, **overrides):
    """Run and keep the ``Simulation`` for its final state and trace."""
    loaded = load(text, **overrides)
    simulation = Simulation(loaded.topology, loaded.workloads, loaded.events, loaded.settings)
    return simulation, simulation.run_until()


def clone_farm(clones, storage='', node='node { rate 1000 rps disk 10 GB }', detect='0 us'):
    return f"""
        farm "f" {{
          service "s" {{
            kind racs
            {storage}
            clones {clones}
            {node}
            balancer round_robin detect {detect}
          }}
        }}
    """


def workload(target='"f"/"s"', arrival='fixed 1 ms', mix='read 1 write 0', deadline='1 s',
             demand='100 us', duration='100 s', extra=''):
    return f"""
        workload "w" {{
          target {target}
          arrival {arrival}
          mix {mix}
          deadline {deadline}
          demand {demand}
          {extra}
          duration {duration}
        }}
    """


def inject(*lines):
    body = '\n'.join(f"  at {at}: {action}" for at, action in lines)
    return f"\ninject {{\n{body}\n}}\n"


def down_windows(node_index, slots):
    """
    Merged ``[start, end)`` slot ranges in which decimal digit
    ``node_index`` of the slot number is 0.
    """
    windows = []
    start = None
    for slot in range(slots + 1):
        down = slot < slots and (slot // 10 ** node_index) % 10 == 0
        if down and start is None:
            start = slot
        elif not down and start is not None:
            windows.append((start, slot))
            start = None
    return windows


class CloneAvailabilityTestCase(SimpleTestCase):
    """Test three independent clones each up 90% of the time."""

    def test_three_nines(self):
        """Test that three clones at 0.9 availability give 0.999."""
        # 1000 slots of 100 ms; clone i is down when digit i of the slot is 0,
        # so each clone is down 10% of the time and all three only in slot 0
        lines = []
        for index in range(3):
            for start, end in down_windows(index, 1_000):
                lines.append((f"{start * 100} ms", f'fail node "f"/"s"/"n{index}"'))
                if end < 1_000:
                    lines.append((f"{end * 100} ms", f'repair node "f"/"s"/"n{index}"'))
        text = clone_farm(3) + workload(arrival='fixed 800 us') + inject(*lines)

        report = run(text)
        total = report.scope('total')
        self.assertEqual(total.presented, 124_999)
        # The 124 arrivals of slot 0 find every clone down
        self.assertEqual(total.failed, 124)
        self.assertAlmostEqual(float(availability(report, 'total')), 0.999, delta=0.005)


class PartitionAvailabilityTestCase(SimpleTestCase):
    """Test that partitioning alone does not mask failures."""

    def test_one_of_four_down_for_a_tenth(self):
        """Test availability 1 - f/P with one of four bare partitions down 10% of the run."""
        text = f"""
            farm "f" {{
              service "s" {{
                kind raps
                partitions 4
                buckets 64
                node {{ rate 1000 rps disk 10 GB }}
                balancer round_robin detect 0 us
              }}
            }}
        """ + workload(extra='keys 65536 uniform') + inject(
            ('45 s', 'fail node "f"/"s"/"n1"'),
            ('55 s', 'repair node "f"/"s"/"n1"'),
        )
        report = run(text)
        self.assertAlmostEqual(float(availability(report, 'total')), 0.975, delta=0.003)


class PackFailoverOutageTestCase(SimpleTestCase):
    """Test the outage window of an active-passive pack."""

    def test_detect_plus_takeover(self):
        """Test 15 s of failed requests on the affected partition at 25 rps."""
        text = """
            farm "f" {
              service "s" {
                kind raps
                partitions 4
                buckets 4
                node { rate 1000 rps disk 10 GB }
                pack { size 2 mode active_passive storage shared_nothing }
                balancer round_robin detect 5 s
              }
            }

            defaults {
              takeover 10 s
            }
        """ + workload(arrival='fixed 10 ms', demand='1 ms', duration='200 s', extra='keys 4 sequential') + inject(
            ('100 s', 'fail node "f"/"s"/"n0"'),
        )
        report = run(text)
        self.assertAlmostEqual(report.scope('f/s').failed, 375, delta=2)


class WriteScalingTestCase(SimpleTestCase):
    """Test that clones scale reads but not writes."""

    def saturated(self, clones, mix, arrival):
        text = clone_farm(clones) + workload(
            arrival=arrival, mix=mix, demand='1 ms', deadline='1 h', duration='10 s',
        )
        return throughput(run(text), 'total')

    def test_writes_do_not_scale(self):
        """Test that four clones write no faster than one."""
        one = self.saturated(1, 'read 0 write 1', 'fixed 500 us')
        four = self.saturated(4, 'read 0 write 1', 'fixed 500 us')
        self.assertLessEqual(abs(four / one - 1), Fraction(5, 100))

    def test_reads_scale(self):
        """Test that four clones read four times faster than one."""
        one = self.saturated(1, 'read 1 write 0', 'fixed 125 us')
        four = self.saturated(4, 'read 1 write 0', 'fixed 125 us')
        self.assertLessEqual(abs(four / one / 4 - 1), Fraction(10, 100))


class CloneCountAvailabilityTestCase(SimpleTestCase):
    """Test that adding a clone to a saturated service never costs availability."""

    def availability(self, clones, seed):
        text = clone_farm(clones) + workload(
            arrival='poisson 1500 rps', demand='1 ms', deadline='50 ms', duration='2 s',
        )
        return availability(run(text, seed=seed), 'total')

    def test_more_clones_never_worse(self):
        """Test availability over 1, 2 and 3 clones for ten seeds."""
        for seed in range(1, 11):
            with self.subTest(seed=seed):
                series = [self.availability(clones, seed) for clones in (1, 2, 3)]
                self.assertLess(series[0], Fraction(9, 10))
                self.assertEqual(series, sorted(series))


class SharedDiskBottleneckTestCase(SimpleTestCase):
    """Test the shared store of a shared-disk clone set."""

    STORAGE = 'storage shared_disk invalidate 1 ms store { rate 1000 rps disk 1 TB }'

    def report(self, clones):
        text = clone_farm(clones, storage=self.STORAGE) + workload(
            arrival='fixed 5 ms', mix='read 1 write 1', demand='1 ms', deadline='100 ms', duration='20 s',
        )
        return run(text)

    def test_store_utilization_grows_with_clones(self):
        """Test that every extra clone adds invalidation work at the store."""
        utilizations = [self.report(clones).nodes['f/s/store'].utilization for clones in (1, 2, 4)]
        self.assertLess(utilizations[0], utilizations[1])
        self.assertLess(utilizations[1], utilizations[2])

    def test_saturated_store_loses_availability(self):
        """Test that availability drops once the store is overloaded."""
        small = self.report(2)
        large = self.report(16)
        self.assertGreater(large.nodes['f/s/store'].utilization, Fraction(95, 100))
        self.assertLess(availability(large, 'total'), availability(small, 'total'))


class ActiveActiveOverloadTestCase(SimpleTestCase):
    """Test a survivor taking over the load of its failed pack mate."""

    TEXT = """
        farm "f" {
          service "s" {
            kind raps
            partitions 2
            buckets 2
            node { rate 1000 rps disk 10 GB }
            pack { size 2 mode active_active storage shared_nothing }
            balancer round_robin detect 1 s
          }
        }

        defaults {
          takeover 1 s
          failback on_repair
        }
    """ + workload(demand='1200 us', deadline='100 ms', duration='60 s', extra='keys 2 sequential') + inject(
        ('20 s', 'fail node "f"/"s"/"n0"'),
        ('40 s', 'repair node "f"/"s"/"n0"'),
    )

    def test_survivor_queue_grows_until_repair(self):
        """Test that the survivor's queue grows at every sample between takeover and repair."""
        report = run(self.TEXT)
        samples = list(report.nodes['f/s/n1'].queue_samples)
        overloaded = samples[22:39]
        for earlier, later in zip(overloaded, overloaded[1:]):
            self.assertLess(earlier, later)

    def test_availability_drops(self):
        """Test that the run with the failure is less available than before it."""
        before = run(self.TEXT, until=19_000_000)
        self.assertEqual(before.scope('total').failed, 0)
        self.assertEqual(before.scope('total').late, 0)
        self.assertLess(availability(run(self.TEXT), 'total'), availability(before, 'total'))


class GeoplexAvailabilityTestCase(SimpleTestCase):
    """Test that a second site masks a site failure after detection."""

    FARMS = """
        geoplex {
          mode active_active
          farms "a", "b"
        }

        farm "a" {
          service "web" {
            kind racs
            clones 2
            node { rate 1000 rps disk 10 GB }
            balancer round_robin detect 0 us
          }
        }

        farm "b" {
          service "web" {
            kind racs
            clones 2
            node { rate 1000 rps disk 10 GB }
            balancer round_robin detect 0 us
          }
        }

        defaults {
          geoplex_detect 1 s
        }
    """
    FAULTS = inject(('50 s', 'fail site "a"'), ('60 s', 'repair site "a"'))

    def test_geoplex_beats_single_farm(self):
        """Test both availabilities against their window arithmetic."""
        arrivals = 9_999
        geoplex = run(self.FARMS + workload(target='"web"', arrival='fixed 10 ms', demand='1 ms') + self.FAULTS)
        single = run(self.FARMS + workload(target='"a"/"web"', arrival='fixed 10 ms', demand='1 ms') + self.FAULTS)

        # Half of the traffic goes to the failed site until it is detected
        expected_geoplex = 1 - Fraction(50, arrivals)
        expected_single = 1 - Fraction(1_000, arrivals)
        self.assertAlmostEqual(float(availability(geoplex, 'total')), float(expected_geoplex), delta=0.005)
        self.assertAlmostEqual(float(availability(single, 'total')), float(expected_single), delta=0.005)
        self.assertGreater(availability(geoplex, 'total'), availability(single, 'total'))


class RebalanceTestCase(SimpleTestCase):
    """Test adding a third partition over six buckets."""

    def test_move_plan_and_audit(self):
        """Test the moves, the final counts and a clean ownership audit."""
        text = """
            farm "f" {
              service "s" {
                kind raps
                partitions 2
                buckets 6
                node { rate 1000 rps disk 10 GB }
                state_size 600 MB
                balancer round_robin detect 0 us
              }
            }
        """ + workload(duration='30 s', extra='keys 6 sequential') + inject(('10 s', 'add_partition "f"/"s"'))
        simulation, report = simulate(text, trace=True)
        trace = simulation.trace.render()

        # 100 MB of state per bucket at 100 MB/s
        self.assertIn('11000000 BucketMoveDone f/s b0 p0->p2\n', trace)
        self.assertIn('11000000 BucketMoveDone f/s b1 p1->p2\n', trace)
        counts = Counter(simulation.state.service('f', 's').assignment)
        self.assertEqual([counts[partition] for partition in range(3)], [2, 2, 2])
        self.assertEqual(audit_bucket_ownership(trace), [])
        self.assertEqual(report.scope('total').failed, 0)


class DeterminismTestCase(SimpleTestCase):
    """Test that a seed fixes every output byte."""

    def outputs(self, name, seed=None):
        loaded = load((BUNDLED / f"{name}.farm").read_text(), trace=True)
        result = run_loaded(loaded, seed=seed, until=30_000_000)
        return emit_report(result.report, 'csv'), result.trace

    def test_same_seed_same_bytes(self):
        """Test identical report and trace for two runs of every bundled scenario."""
        for name in bundled_scenarios():
            with self.subTest(name=name):
                self.assertEqual(self.outputs(name), self.outputs(name))

    def test_other_seed_other_run(self):
        """Test that Poisson arrivals differ between seeds."""
        self.assertNotEqual(
            self.outputs('geoplex_active_passive', seed=1), self.outputs('geoplex_active_passive', seed=2),
        )
