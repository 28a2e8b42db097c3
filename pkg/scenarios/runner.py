"""
Running loaded scenarios and writing their output files.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import NamedTuple

import django
from django.conf import settings

from engine.simulation import Simulation
from metrics.emitters import emit_report
from metrics.statistics import merge_reports

logger = logging.getLogger(__name__)

RUN_FILES = {
    'report.csv': 'csv',
    'report.json': 'json',
    'nodes.csv': 'nodes',
    'throughput.csv': 'series',
}

SUMMARY_FILES = {
    'summary.csv': 'csv',
    'summary.json': 'json',
}

TRACE_FILE = 'trace.log'


class RunResult(NamedTuple):
    seed: int
    report: object
    trace: str


def run_loaded(loaded, seed=None, until=None):
    """
    Run one simulation of a loaded scenario.

    Args:
        loaded (LoadedScenario): Output of ``load_scenario``
        seed (int): Overrides the scenario seed
        until (int): Overrides the run end, in µs

    Returns:
        RunResult: The final report and the rendered trace
    """
    run = loaded.settings.with_overrides(seed=seed, until=until)
    simulation = Simulation(loaded.topology, loaded.workloads, loaded.events, run)
    report = simulation.run_until()
    return RunResult(run.seed, report, simulation.trace.render())


def write_run(result, out_dir):
    """Write the report files and the trace of one run into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for filename, fmt in RUN_FILES.items():
        (out_dir / filename).write_bytes(emit_report(result.report, fmt))
    (out_dir / TRACE_FILE).write_text(result.trace, encoding='utf-8')
    logger.info("Wrote seed %d outputs to %s", result.seed, out_dir)
    return out_dir


def _setup_worker():
    if not settings.configured:
        os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'farm_simulator.settings')
    django.setup()


def _run_seed(loaded, seed, until):
    return run_loaded(loaded, seed=seed, until=until)


def sweep_seeds(base_seed, count):
    """``count`` consecutive seeds from ``base_seed``, wrapping at 2**64."""
    return [(base_seed + offset) % (1 << 64) for offset in range(count)]


def sweep(loaded, seeds, until=None, workers=None):
    """
    Run independent simulations, one per seed, in worker processes.

    Results come back in seed-list order whatever order the workers finish
    in.

    Args:
        loaded (LoadedScenario): Output of ``load_scenario``
        seeds (list): Seeds to run
        until (int): Overrides the run end, in µs
        workers (int): Process count; ``FARMSIM_SWEEP_WORKERS`` or the CPU
            count when not given

    Returns:
        list: ``RunResult`` per seed
    """
    if workers is None:
        workers = getattr(settings, 'FARMSIM_SWEEP_WORKERS', 0) or None
    if len(seeds) == 1 or workers == 1:
        return [run_loaded(loaded, seed=seed, until=until) for seed in seeds]

    logger.info("Sweeping %d seeds on %s workers", len(seeds), workers or 'all')
    with ProcessPoolExecutor(max_workers=workers, initializer=_setup_worker) as pool:
        futures = [pool.submit(_run_seed, loaded, seed, until) for seed in seeds]
        return [future.result() for future in futures]


def write_sweep(results, out_dir):
    """
    Per-seed outputs under ``seed-<s>/`` plus the merged summary at the root.

    Returns:
        RunReport: The merged report
    """
    out_dir = Path(out_dir)
    for result in results:
        write_run(result, out_dir / f"seed-{result.seed}")
    merged = merge_reports(result.report for result in results)
    out_dir.mkdir(parents=True, exist_ok=True)
    for filename, fmt in SUMMARY_FILES.items():
        (out_dir / filename).write_bytes(emit_report(merged, fmt))
    return merged
