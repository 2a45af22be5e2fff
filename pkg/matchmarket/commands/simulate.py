"""
simulate: run a scenario over its seeds and write traces plus a summary
"""

import logging

from matchmarket.batch import run_batch
from matchmarket.commands import add_common_arguments, scenario_from_args
from matchmarket.report import summarize, write_json, write_trace_csv

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser('simulate', help='Run a scenario and write trace CSV and summary JSON')
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)
    return parser


def handle(args):
    scenario_file = scenario_from_args(args)
    traces = run_batch(scenario_file.scenario, scenario_file.seeds, args.threads)

    for trace in traces:
        write_trace_csv(trace, scenario_file.output.trace_path(trace.scenario.seed))
    summary = summarize(scenario_file, traces)
    path = write_json(summary, scenario_file.output.summary_path())

    print(f"Simulated {scenario_file.name}: {len(traces)} seeds x {scenario_file.scenario.horizon} steps")
    if summary['welfare_min_ratio'] is not None:
        print(f"Minimum welfare ratio: {summary['welfare_min_ratio']:.6g}")
    for label, verdict in summary['classifier'].items():
        print(f"  {label}: optimal regret growth {verdict}")
    print(f"Summary written to {path}")
    return 0
