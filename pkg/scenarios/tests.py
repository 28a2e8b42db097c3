import json
import tempfile
from io import StringIO
from pathlib import Path
from textwrap import dedent

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from core.utils import UnknownUnit
from lifecycle.models import FailbackMode, ScenarioAction
from routing.models import BalancerVariant
from scenarios.exceptions import DuplicateBlockName, ScenarioSyntaxError, UnresolvedReference
from scenarios.loader import declared_node_count, load_scenario
from scenarios.parser import BUNDLED, bundled_scenarios, parse_scenario, resolve_scenario_path
from scenarios.runner import RUN_FILES, SUMMARY_FILES, TRACE_FILE, run_loaded, sweep, sweep_seeds
from scenarios.serializer import serialize_scenario
from topology.exceptions import InvalidValue
from topology.models import PackMode, StorageVariant
from workload.models import ArrivalKind, KeyDistributionKind

MINIMAL = dedent("""\
    farm "f" {
      service "s" {
        kind racs
        clones 3
        node { rate 1000 rps disk 10 GB }
      }
    }

    workload "w" {
      target "f"/"s"
      arrival fixed 1 ms
      mix read 1 write 0
      deadline 1 s
      demand 100 us
      duration 2 s
    }
""")


def scenario(*blocks):
    return '\n\n'.join(dedent(block).strip() for block in blocks) + '\n'


FARM_PARTITIONED = """
    farm "f" {
      service "s" {
        kind raps
        partitions 4
        node { rate 1000 rps disk 10 GB }
        pack { size 2 mode active_passive storage shared_nothing }
      }
    }
"""


class ParseScenarioTestCase(SimpleTestCase):
    """Test cases for the scenario parser."""

    def test_minimal(self):
        """Test one farm, one cloned service and one workload."""
        ast = parse_scenario(MINIMAL)
        self.assertEqual(len(ast.farms), 1)
        service = ast.farms[0].services[0]
        self.assertEqual((service.name, service.kind, service.clones), ('s', 'racs', 3))
        self.assertEqual(service.nodes[0].rate.unit, 'rps')
        workload = ast.workloads[0]
        self.assertEqual(workload.target, ('f', 's'))
        self.assertEqual(workload.arrival.kind, 'fixed')
        self.assertEqual(ast.farms[0].line, 1)

    def test_comments_and_blank_lines(self):
        """Test that comments are ignored."""
        text = "# a comment\n\n" + MINIMAL.replace('clones 3', 'clones 3  # three of them')
        self.assertEqual(parse_scenario(text), parse_scenario(MINIMAL))

    def test_empty_text(self):
        """Test that an empty file is an empty scenario."""
        self.assertEqual(parse_scenario('').blocks, ())

    def test_missing_brace_reports_line(self):
        """Test that a missing opening brace is reported at the next token."""
        text = 'farm "f" {\n  service "s"\n    kind racs\n  }\n}\n'
        with self.assertRaises(ScenarioSyntaxError) as raised:
            parse_scenario(text)
        self.assertEqual(raised.exception.line, 3)
        self.assertIn('line 3', str(raised.exception))

    def test_unterminated_block(self):
        """Test that a block left open at the end of the text is refused."""
        with self.assertRaises(ScenarioSyntaxError):
            parse_scenario('farm "f" {\n  service "s" {\n    kind racs\n')

    def test_non_numeric_value(self):
        """Test that a word where a number belongs is a syntax error."""
        with self.assertRaises(ScenarioSyntaxError) as raised:
            parse_scenario('farm "f" {\n  service "s" {\n    kind racs\n    clones three\n  }\n}\n')
        self.assertEqual(raised.exception.line, 4)

    def test_unknown_unit(self):
        """Test that a size where a time belongs is refused with its position."""
        text = MINIMAL.replace('deadline 1 s', 'deadline 1 GB')
        with self.assertRaises(UnknownUnit) as raised:
            parse_scenario(text)
        self.assertEqual(raised.exception.unit, 'GB')
        self.assertEqual(raised.exception.line, 13)

    def test_fractional_count(self):
        """Test that counts must be integers."""
        with self.assertRaises(ScenarioSyntaxError):
            parse_scenario(MINIMAL.replace('clones 3', 'clones 2.5'))

    def test_duplicate_farm(self):
        """Test that two farms with one name are refused."""
        farm = MINIMAL.split('\n\n')[0]
        with self.assertRaises(DuplicateBlockName):
            parse_scenario(farm + '\n\n' + farm + '\n')

    def test_duplicate_defaults(self):
        """Test that a second defaults block is refused."""
        with self.assertRaises(DuplicateBlockName):
            parse_scenario(MINIMAL + '\ndefaults {\n  seed 1\n}\n\ndefaults {\n  seed 2\n}\n')

    def test_duplicate_attribute(self):
        """Test that an attribute given twice in one service is refused."""
        with self.assertRaises(ScenarioSyntaxError):
            parse_scenario(MINIMAL.replace('clones 3', 'clones 3\n    clones 4'))

    def test_inject_and_defaults(self):
        """Test the fault script and run defaults."""
        text = MINIMAL + dedent("""
            inject {
              at 500 ms: fail node "f"/"s"/"n1"
              at 1 s: repair node "f"/"s"/"n1"
              at 1.5 s: add_clone "f"/"s"
            }

            defaults {
              seed 42
              failback on_repair
              retry on
            }
        """)
        ast = parse_scenario(text)
        self.assertEqual([action.action for action in ast.actions], ['fail_node', 'repair_node', 'add_clone'])
        self.assertEqual(ast.actions[0].path, ('f', 's', 'n1'))
        self.assertEqual(ast.defaults.seed, 42)
        self.assertEqual(ast.defaults.failback, 'on_repair')
        self.assertTrue(ast.defaults.retry)


class SerializeScenarioTestCase(SimpleTestCase):
    """Test cases for canonical scenario text."""

    def test_empty(self):
        """Test that an empty scenario serializes to nothing."""
        self.assertEqual(serialize_scenario(parse_scenario('')), '')

    def test_canonical_text_is_fixpoint(self):
        """Test that canonical text serializes to itself."""
        self.assertEqual(serialize_scenario(parse_scenario(MINIMAL)), MINIMAL)

    def test_reformats_loose_text(self):
        """Test that loosely written text parses back to the same tree once canonical."""
        loose = MINIMAL.replace('\n  ', '\n        ').replace('1 ms', '1.0 ms')
        canonical = serialize_scenario(parse_scenario(loose))
        self.assertEqual(canonical, MINIMAL)

    def test_bundled_round_trip(self):
        """Test parse, serialize and parse again on every bundled scenario."""
        for name in bundled_scenarios():
            with self.subTest(name=name):
                ast = parse_scenario((BUNDLED / f"{name}.farm").read_text())
                canonical = serialize_scenario(ast)
                self.assertEqual(parse_scenario(canonical), ast)
                self.assertEqual(serialize_scenario(parse_scenario(canonical)), canonical)


class LoadScenarioTestCase(SimpleTestCase):
    """Test cases for resolving a parsed scenario."""

    def test_minimal(self):
        """Test units, defaults and the resulting topology."""
        loaded = load_scenario(parse_scenario(MINIMAL))
        self.assertEqual(loaded.node_count, 3)
        workload = loaded.workloads[0]
        self.assertEqual(workload.arrival.kind, ArrivalKind.FIXED)
        self.assertEqual(workload.arrival.interval, 1_000)
        self.assertEqual(workload.read_fraction, 1.0)
        self.assertEqual(workload.service_demand, 100)
        self.assertEqual(workload.write_demand, 100)
        self.assertEqual(workload.duration, 2_000_000)
        self.assertEqual(workload.key_space, 65_536)
        self.assertEqual(workload.key_dist.kind, KeyDistributionKind.UNIFORM)
        service = loaded.topology.service('f', 's')
        self.assertEqual(service.balancer.variant, BalancerVariant.SPRAYER_ROUND_ROBIN)
        self.assertEqual(service.balancer.detection_delay, 500_000)
        self.assertEqual(service.nodes[2].disk_capacity, 10 ** 10)

    def test_mix_weights(self):
        """Test that mix weights become a read fraction."""
        ast = parse_scenario(MINIMAL.replace('mix read 1 write 0', 'mix read 9 write 1'))
        self.assertAlmostEqual(load_scenario(ast).workloads[0].read_fraction, 0.9)

    def test_empty_mix(self):
        """Test that a mix of zero weights is refused."""
        ast = parse_scenario(MINIMAL.replace('mix read 1 write 0', 'mix read 0 write 0'))
        with self.assertRaises(InvalidValue):
            load_scenario(ast)

    def test_defaults_and_overrides(self):
        """Test that the defaults block sets the run and command-line flags win."""
        text = MINIMAL + '\ndefaults {\n  seed 7\n  detect 2 s\n  takeover 3 s\n  failback on_repair\n}\n'
        loaded = load_scenario(parse_scenario(text), seed=9)
        self.assertEqual(loaded.settings.seed, 9)
        self.assertEqual(loaded.settings.takeover_time, 3_000_000)
        self.assertEqual(loaded.settings.failback, FailbackMode.ON_REPAIR)
        self.assertEqual(loaded.topology.service('f', 's').balancer.detection_delay, 2_000_000)
        self.assertEqual(load_scenario(parse_scenario(text)).settings.seed, 7)

    def test_pack_layout(self):
        """Test four partitions in active-passive packs of two."""
        loaded = load_scenario(parse_scenario(scenario(FARM_PARTITIONED)))
        service = loaded.topology.service('f', 's')
        self.assertEqual(loaded.node_count, 8)
        self.assertEqual(len(service.packs), 4)
        self.assertEqual(service.packs[1].member_ids, (2, 3))
        self.assertEqual(service.bucket_count, 64)

    def test_active_active_packs_host_one_partition_per_member(self):
        """Test that active-active packs host as many partitions as members by default."""
        text = scenario(FARM_PARTITIONED.replace('active_passive', 'active_active'))
        service = load_scenario(parse_scenario(text)).topology.service('f', 's')
        self.assertEqual(len(service.packs), 2)
        self.assertEqual(service.packs[0].partitions_hosted, (0, 1))
        self.assertEqual(service.packs[0].mode, PackMode.ACTIVE_ACTIVE)

    def test_declared_node_count(self):
        """Test the node count of a service block before it is built."""
        block = parse_scenario(scenario(FARM_PARTITIONED)).farms[0].services[0]
        self.assertEqual(declared_node_count(block), 8)

    def test_shared_disk_store(self):
        """Test a shared-disk clone set with its store."""
        text = MINIMAL.replace(
            'clones 3',
            'storage shared_disk invalidate 200 us store { rate 5000 rps disk 1 TB }\n    clones 3',
        )
        loaded = load_scenario(parse_scenario(text))
        storage = loaded.topology.service('f', 's').storage
        self.assertEqual(storage.variant, StorageVariant.SHARED_DISK)
        self.assertEqual(storage.invalidation_cost, 200)
        self.assertEqual(loaded.node_count, 4)

    def test_unknown_target(self):
        """Test that a workload aimed at a missing service is refused."""
        with self.assertRaises(UnresolvedReference):
            load_scenario(parse_scenario(MINIMAL.replace('target "f"/"s"', 'target "f"/"db"')))

    def test_geoplex_target_without_geoplex(self):
        """Test that a one-segment target needs a geoplex."""
        with self.assertRaises(UnresolvedReference):
            load_scenario(parse_scenario(MINIMAL.replace('target "f"/"s"', 'target "s"')))

    def test_inject_unknown_node(self):
        """Test that a fault on a node the service does not have is refused."""
        text = MINIMAL + '\ninject {\n  at 1 s: fail node "f"/"s"/"n7"\n}\n'
        with self.assertRaises(UnresolvedReference):
            load_scenario(parse_scenario(text))

    def test_inject_node_added_by_scaling(self):
        """Test that a node created by add_clone may be targeted."""
        text = MINIMAL + '\ninject {\n  at 1 s: add_clone "f"/"s"\n  at 2 s: fail node "f"/"s"/"n3"\n}\n'
        loaded = load_scenario(parse_scenario(text))
        self.assertEqual([event.action for event in loaded.events],
                         [ScenarioAction.ADD_CLONE, ScenarioAction.FAIL_NODE])
        self.assertEqual(loaded.events[1].at, 2_000_000)

    def test_add_partition_to_clones(self):
        """Test that add_partition on a cloned service is refused."""
        text = MINIMAL + '\ninject {\n  at 1 s: add_partition "f"/"s"\n}\n'
        with self.assertRaises(UnresolvedReference):
            load_scenario(parse_scenario(text))

    def test_wrong_path_depth(self):
        """Test that a node action needs a node path."""
        text = MINIMAL + '\ninject {\n  at 1 s: fail node "f"/"s"\n}\n'
        with self.assertRaises(UnresolvedReference):
            load_scenario(parse_scenario(text))

    def test_bundled_msft1997(self):
        """Test the four-site, 150-node scenario."""
        loaded = load_scenario(parse_scenario((BUNDLED / 'msft1997.farm').read_text()))
        self.assertEqual(len(loaded.topology.farms), 4)
        self.assertEqual(loaded.node_count, 150)

    def test_every_bundled_scenario_loads(self):
        """Test that every shipped scenario validates."""
        self.assertIn('msft1997', bundled_scenarios())
        for name in bundled_scenarios():
            with self.subTest(name=name):
                loaded = load_scenario(parse_scenario((BUNDLED / f"{name}.farm").read_text()))
                self.assertGreater(loaded.node_count, 0)

    def test_bundled_names(self):
        """Test the names of the shipped scenarios."""
        self.assertEqual(bundled_scenarios(), [
            'fig5_threetier',
            'geoplex_active_passive',
            'msft1997',
            'taxonomy_clone_shared_disk',
            'taxonomy_clone_shared_nothing',
            'taxonomy_pack_shared_disk',
            'taxonomy_pack_shared_nothing',
        ])

    @override_settings(FARMSIM_MAX_ZIPF_KEYS=1_000)
    def test_zipf_key_space_checked_at_load(self):
        """Test that the Zipf key-space maximum is checked before any run."""
        text = MINIMAL.replace('  demand 100 us\n', '  demand 100 us\n  keys 1001 zipf 0.8\n')
        with self.assertRaises(InvalidValue):
            load_scenario(parse_scenario(text))
        load_scenario(parse_scenario(text.replace('keys 1001', 'keys 1000')))

    def test_resolve_bundled_name(self):
        """Test that a bare bundled name resolves to the shipped file."""
        self.assertEqual(resolve_scenario_path('msft1997'), BUNDLED / 'msft1997.farm')
        self.assertEqual(resolve_scenario_path('nowhere.farm'), Path('nowhere.farm'))


class RunnerTestCase(SimpleTestCase):
    """Test cases for running loaded scenarios."""

    def setUp(self):
        """Set up the minimal scenario."""
        self.loaded = load_scenario(parse_scenario(MINIMAL))

    def test_run_loaded(self):
        """Test a single run with a seed override."""
        result = run_loaded(self.loaded, seed=5)
        self.assertEqual(result.seed, 5)
        self.assertEqual(result.report.scope('total').presented, 1_999)

    def test_until_override(self):
        """Test that the end time flag cuts the run short."""
        result = run_loaded(self.loaded, until=1_000_000)
        self.assertEqual(result.report.duration_us, 1_000_000)
        # The arrival at exactly 1 s is presented and still in flight
        self.assertEqual(result.report.scope('total').presented, 1_000)
        self.assertEqual(result.report.scope('total').in_flight, 1)

    def test_sweep_seeds_wrap(self):
        """Test consecutive seeds wrapping at 2**64."""
        self.assertEqual(sweep_seeds(2 ** 64 - 1, 3), [2 ** 64 - 1, 0, 1])

    def test_parallel_sweep_matches_serial(self):
        """Test that worker processes give the same reports in seed order."""
        seeds = [3, 1, 2]
        serial = sweep(self.loaded, seeds, workers=1)
        parallel = sweep(self.loaded, seeds, workers=2)
        self.assertEqual([result.seed for result in parallel], seeds)
        self.assertEqual([result.report for result in parallel], [result.report for result in serial])


class FarmsimCommandTestCase(SimpleTestCase):
    """Test cases for the farmsim management command."""

    def setUp(self):
        """Set up a scratch directory holding the minimal scenario."""
        scratch = tempfile.TemporaryDirectory()
        self.addCleanup(scratch.cleanup)
        self.dir = Path(scratch.name)
        self.scenario = self.dir / 'minimal.farm'
        self.scenario.write_text(MINIMAL)

    def farmsim(self, *args):
        stdout, stderr = StringIO(), StringIO()
        call_command('farmsim', *[str(arg) for arg in args], stdout=stdout, stderr=stderr)
        return stdout.getvalue(), stderr.getvalue()

    def test_validate(self):
        """Test that a valid scenario is reported ok."""
        out, _ = self.farmsim('validate', self.scenario)
        self.assertIn('ok (1 farms, 3 nodes, 1 workloads, 0 events)', out)

    def test_validate_bundled_name(self):
        """Test validating a bundled scenario by name."""
        out, _ = self.farmsim('validate', 'msft1997')
        self.assertIn('4 farms, 150 nodes', out)

    def test_validate_malformed(self):
        """Test that a malformed scenario exits with status 2."""
        self.scenario.write_text(MINIMAL.replace('kind racs', 'kind racs {'))
        with self.assertRaises(CommandError) as raised:
            self.farmsim('validate', self.scenario)
        self.assertEqual(raised.exception.returncode, 2)

    def test_missing_file(self):
        """Test that an unreadable scenario exits with status 1."""
        with self.assertRaises(CommandError) as raised:
            self.farmsim('validate', self.dir / 'absent.farm')
        self.assertEqual(raised.exception.returncode, 1)

    def test_not_utf8(self):
        """Test that a scenario file that is not UTF-8 exits with status 2."""
        self.scenario.write_bytes(b'farm "f\xff\xfe" {}\n')
        with self.assertRaises(CommandError) as raised:
            self.farmsim('validate', self.scenario)
        self.assertEqual(raised.exception.returncode, 2)
        self.assertIn('not UTF-8', str(raised.exception))

    def test_zipf_key_space_too_large(self):
        """Test that validate and run both refuse a Zipf key space over the maximum."""
        self.scenario.write_text(MINIMAL.replace('  demand 100 us\n', '  demand 100 us\n  keys 2000000 zipf 1.0\n'))
        for action in ('validate', 'run'):
            with self.subTest(action=action):
                with self.assertRaises(CommandError) as raised:
                    self.farmsim(action, self.scenario, *(['--out', self.dir / 'out'] if action == 'run' else []))
                self.assertEqual(raised.exception.returncode, 2)
                self.assertIn('Zipf key space 2000000', str(raised.exception))
        self.assertFalse((self.dir / 'out' / 'report.csv').exists())

    def test_bad_seed(self):
        """Test that a malformed flag is a usage error."""
        with self.assertRaises(CommandError) as raised:
            self.farmsim('run', self.scenario, '--seed', 'abc')
        self.assertEqual(raised.exception.returncode, 1)

    def test_run_writes_reports(self):
        """Test that a run writes every report file and prints the summary."""
        out_dir = self.dir / 'out'
        out, _ = self.farmsim('run', self.scenario, '--out', out_dir, '--seed', '3', '--trace')
        for filename in list(RUN_FILES) + [TRACE_FILE]:
            self.assertTrue((out_dir / filename).exists(), filename)
        summary = json.loads((out_dir / 'report.json').read_text())
        self.assertEqual(summary['total']['presented'], 1_999)
        self.assertIn('Route f/s', (out_dir / TRACE_FILE).read_text())
        self.assertIn('total', out)
        self.assertIn('Reports written to', out)

    def test_run_until(self):
        """Test the end time flag."""
        out_dir = self.dir / 'out'
        self.farmsim('run', self.scenario, '--out', out_dir, '--until', '500ms')
        summary = json.loads((out_dir / 'report.json').read_text())
        self.assertEqual(summary['total']['presented'], 500)

    def test_run_sweep(self):
        """Test that a seed sweep writes one folder per seed and a merged summary."""
        out_dir = self.dir / 'sweep'
        self.farmsim('run', self.scenario, '--out', out_dir, '--seed', '10', '--seeds', '2', '--workers', '1')
        self.assertTrue((out_dir / 'seed-10' / 'report.csv').exists())
        self.assertTrue((out_dir / 'seed-11' / 'report.csv').exists())
        for filename in SUMMARY_FILES:
            self.assertTrue((out_dir / filename).exists(), filename)
        summary = json.loads((out_dir / 'summary.json').read_text())
        self.assertEqual(summary['total']['presented'], 2 * 1_999)

    def test_report(self):
        """Test printing a saved report as a table."""
        out_dir = self.dir / 'out'
        self.farmsim('run', self.scenario, '--out', out_dir)
        out, _ = self.farmsim('report', out_dir / 'report.json')
        self.assertTrue(out.startswith('scope'))
        self.assertIn('f/s', out)

    def test_report_not_a_report(self):
        """Test that a file that is not a report exits with status 2."""
        bogus = self.dir / 'bogus.json'
        bogus.write_text('[1, 2, 3]')
        with self.assertRaises(CommandError) as raised:
            self.farmsim('report', bogus)
        self.assertEqual(raised.exception.returncode, 2)
