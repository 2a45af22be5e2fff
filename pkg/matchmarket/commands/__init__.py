"""
Subcommand modules
Each module exposes register(subparsers) and attaches a handler through
set_defaults; the helpers here are shared by all of them
"""

import logging
from dataclasses import replace

from matchmarket.errors import ScenarioError
from matchmarket.scenario import load_scenario

logger = logging.getLogger(__name__)


def add_common_arguments(parser):
    parser.add_argument('--scenario', required=True, help='Path to a JSON scenario file')
    parser.add_argument('--out', help='Output directory (overrides the scenario file)')
    parser.add_argument('--seeds', help='Comma-separated seeds (overrides the scenario file)')
    parser.add_argument('--threads', type=int, help='Worker threads for seed batches')
    parser.add_argument('--horizon', type=int, help='Override the scenario horizon')
    parser.add_argument('--log-level', help='Logging level (DEBUG, INFO, WARNING, ERROR)')


def parse_seeds(text):
    try:
        seeds = [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ScenarioError('seeds', f"expected comma-separated integers, got {text!r}")
    if not seeds:
        raise ScenarioError('seeds', "no seeds given")
    return tuple(seeds)


def scenario_from_args(args):
    """Load the scenario file and apply command-line overrides"""
    scenario_file = load_scenario(args.scenario)
    if args.seeds:
        scenario_file = replace(scenario_file, seeds=parse_seeds(args.seeds))
    if args.out:
        scenario_file = replace(scenario_file, output=replace(scenario_file.output, directory=args.out))
    if args.horizon is not None:
        if args.horizon < 0:
            raise ScenarioError('horizon', f"must be >= 0, got {args.horizon}")
        checkpoints = scenario_file.checkpoints
        if checkpoints is not None:
            checkpoints = tuple(h for h in checkpoints if h <= args.horizon) or None
        scenario_file = replace(scenario_file, scenario=scenario_file.scenario.with_horizon(args.horizon),
                                checkpoints=checkpoints)
    logger.debug(f"Scenario {scenario_file.name}: seeds {scenario_file.seeds}, "
                 f"horizon {scenario_file.scenario.horizon}")
    return scenario_file


def format_agents(labels, values, width=12):
    return '  '.join(f"{label}={value:<{width}.6g}" for label, value in zip(labels, values))
