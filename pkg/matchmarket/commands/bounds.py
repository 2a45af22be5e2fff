"""
bounds: gap statistics and the closed-form regret bounds of a scenario
"""

import os

from matchmarket.commands import add_common_arguments, format_agents, scenario_from_args
from matchmarket.metrics import compute_gaps
from matchmarket.report import bound_table, write_json


def register(subparsers):
    parser = subparsers.add_parser('bounds', help='Print gap statistics and regret bounds')
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)
    return parser


def handle(args):
    scenario = scenario_from_args(args).scenario
    labels = scenario.shape.agent_labels()
    gaps = compute_gaps(scenario.true_prefs, bound=scenario.pricing_bound, rule=scenario.rule)
    bounds = bound_table(scenario, gaps)

    print(f"Delta_min = {gaps.delta_min:.6g}")
    print(f"Delta_max: {format_agents(labels, gaps.delta_max)}")
    if gaps.delta_rho_min is not None:
        print(f"Delta_rho_min = {gaps.delta_rho_min:.6g} (balanced matching {gaps.balanced_matching.label})")
    if gaps.pricing_matching is not None:
        print(f"B = {gaps.bound:.6g} (pricing matching {gaps.pricing_matching.label})")
    else:
        print(f"B = {gaps.bound:.6g} (no unique pricing matching)")
    print(f"Bounds at T = {scenario.horizon}, sigma2 = {scenario.sigma2}, alpha = {scenario.alpha}:")
    for kind, values in bounds.items():
        print(f"  {kind:<15} {format_agents(labels, [values[label] for label in labels])}")

    if args.out:
        write_json({'scenario': scenario.describe(), 'gaps': gaps.to_dict(labels), 'bounds': bounds},
                   os.path.join(args.out, 'bounds.json'))
    return 0
