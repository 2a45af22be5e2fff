"""
Seed-parallel execution of simulation runs
"""

import logging
from concurrent.futures import ProcessPoolExecutor

from matchmarket.config import get_config
from matchmarket.market import run

logger = logging.getLogger(__name__)


def map_seeds(task, scenario, seeds, threads=None):
    """
    Apply `task` to one copy of `scenario` per seed

    Runs are independent and each owns its generator, so worker processes
    change only the wall time, never the results.

    Args:
        task: Module-level callable taking a Scenario
        scenario (Scenario): Base scenario; its own seed is replaced
        seeds (list): Integer seeds
        threads (int): Worker cap; defaults to MATCHMARKET_THREADS

    Returns:
        list: Results in the order of `seeds`
    """
    scenarios = [scenario.with_seed(int(seed)) for seed in seeds]
    workers = min(get_config().thread_cap(threads), max(1, len(scenarios)))
    logger.info(f"Batch {scenario.name}: {len(scenarios)} seeds on {workers} workers")

    if workers == 1:
        return [task(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(task, scenarios))


def run_batch(scenario, seeds, threads=None):
    """
    Run one trace per seed

    Returns:
        list: Traces in the order of `seeds`
    """
    traces = map_seeds(run, scenario, seeds, threads)
    logger.info(f"Batch {scenario.name} done: {len(traces)} traces of {scenario.horizon} steps")
    return traces
