"""
``python manage.py farmsim run|validate|report``

Exit codes: 0 success, 1 usage error, 2 scenario or topology error,
3 error while the simulation runs.
"""
import json
import logging
import sys
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import FarmValidationError, SimulationError
from core.utils import parse_duration
from metrics.emitters import emit_report, render_table
from metrics.exceptions import MetricsError
from scenarios.loader import load_scenario
from scenarios.parser import bundled_scenarios, parse_scenario, resolve_scenario_path
from scenarios.runner import run_loaded, sweep, sweep_seeds, write_run, write_sweep

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
VALIDATION_ERROR = 2
RUNTIME_ERROR = 3


def seed_value(text):
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise ValueError(f"Seed {text} is not an unsigned 64-bit integer")
    return value


def positive_int(text):
    value = int(text)
    if value < 1:
        raise ValueError(f"{text} is not a positive integer")
    return value


class Command(BaseCommand):
    help = 'Run, validate or summarize server-farm simulations'

    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        # Argument errors raise CommandError (exit 1) instead of argparse's exit 2
        parser.called_from_command_line = False
        return parser

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='action', required=True, metavar='{run,validate,report}')

        run = subparsers.add_parser('run', help='Run a scenario and write its reports',
                                    called_from_command_line=False)
        run.add_argument('scenario', help='Scenario file (.farm) or bundled scenario name')
        run.add_argument('--seed', type=seed_value, help='Random seed; defaults to the scenario seed')
        run.add_argument('--seeds', type=positive_int, default=1,
                         help='Number of consecutive seeds to sweep')
        run.add_argument('--until', type=parse_duration, help='Simulated end time, e.g. 3600s')
        run.add_argument('--out', default='.', help='Output directory')
        run.add_argument('--trace', action='store_true', help='Trace every request, not only lifecycle events')
        run.add_argument('--workers', type=positive_int, help='Worker processes for --seeds')

        validate = subparsers.add_parser('validate', help='Parse and check a scenario without running it',
                                         called_from_command_line=False)
        validate.add_argument('scenario', help='Scenario file (.farm) or bundled scenario name')

        report = subparsers.add_parser('report', help='Print a saved report.json as a table',
                                       called_from_command_line=False)
        report.add_argument('report', help='report.json or summary.json')

    def run_from_argv(self, argv):
        try:
            super().run_from_argv(argv)
        except CommandError as error:
            self.stderr.write(f"CommandError: {error}")
            sys.exit(error.returncode)

    def handle(self, *args, **options):
        handler = getattr(self, f"handle_{options['action']}")
        return handler(options)

    def _read(self, path):
        try:
            return Path(path).read_text(encoding='utf-8')
        except OSError as error:
            raise CommandError(f"Cannot read {path}: {error.strerror}", returncode=USAGE_ERROR)
        except UnicodeDecodeError as error:
            raise CommandError(f"{path}: not UTF-8 text ({error.reason} at byte {error.start})",
                               returncode=VALIDATION_ERROR)

    def _load(self, path, **overrides):
        resolved = resolve_scenario_path(path)
        if not resolved.exists():
            raise CommandError(
                f"No scenario file {path}; bundled scenarios: {', '.join(bundled_scenarios())}",
                returncode=USAGE_ERROR,
            )
        text = self._read(resolved)
        try:
            return load_scenario(parse_scenario(text), **overrides)
        except FarmValidationError as error:
            raise CommandError(f"{path}: {error}", returncode=VALIDATION_ERROR)

    def handle_validate(self, options):
        loaded = self._load(options['scenario'])
        self.stdout.write(
            f"{options['scenario']}: ok ({len(loaded.topology.farms)} farms, {loaded.node_count} nodes, "
            f"{len(loaded.workloads)} workloads, {len(loaded.events)} events)"
        )

    def handle_run(self, options):
        loaded = self._load(options['scenario'], trace=options['trace'] or None)
        base_seed = options['seed'] if options['seed'] is not None else loaded.settings.seed
        out_dir = Path(options['out'])

        try:
            if options['seeds'] == 1:
                result = run_loaded(loaded, seed=base_seed, until=options['until'])
                write_run(result, out_dir)
                report = result.report
                summary_file = out_dir / 'report.json'
            else:
                seeds = sweep_seeds(base_seed, options['seeds'])
                results = sweep(loaded, seeds, until=options['until'], workers=options['workers'])
                report = write_sweep(results, out_dir)
                summary_file = out_dir / 'summary.json'
        except FarmValidationError as error:
            raise CommandError(f"{options['scenario']}: {error}", returncode=VALIDATION_ERROR)
        except SimulationError as error:
            logger.error("Simulation failed: %s", error)
            raise CommandError(f"Simulation failed: {error}", returncode=RUNTIME_ERROR)
        except OSError as error:
            raise CommandError(f"Cannot write to {out_dir}: {error.strerror}", returncode=USAGE_ERROR)

        for warning in report.warnings:
            self.stderr.write(f"warning: {warning}")
        self.stdout.write(render_table(json.loads(emit_report(report, 'json'))), ending='')
        self.stdout.write(f"Reports written to {summary_file.parent}")

    def handle_report(self, options):
        text = self._read(options['report'])
        try:
            summary = json.loads(text)
            if not isinstance(summary, dict) or not all(isinstance(values, dict) for values in summary.values()):
                raise MetricsError("expected an object of scope summaries")
            table = render_table(summary)
        except (ValueError, TypeError) as error:
            raise CommandError(f"{options['report']}: not a farmsim report ({error})", returncode=VALIDATION_ERROR)
        self.stdout.write(table, ending='')
