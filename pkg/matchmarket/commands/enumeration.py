"""
enumerate: list the stable matchings of a scenario's true payoffs
"""

import os

from matchmarket.commands import add_common_arguments, scenario_from_args
from matchmarket.report import write_json
from matchmarket.rules import payoff_table
from matchmarket.stable import enumerate_stable, unique_stable


def register(subparsers):
    parser = subparsers.add_parser('enumerate', help='Enumerate stable matchings under the true payoffs')
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)
    return parser


def handle(args):
    scenario = scenario_from_args(args).scenario
    payoffs = payoff_table(scenario.rule, scenario.true_prefs)
    stable_set = enumerate_stable(payoffs)

    print(f"{len(stable_set)} stable matching(s) under the {scenario.rule.kind.value} rule")
    for i, m in enumerate(stable_set, start=1):
        print(f"  M{i}: {m.label}  ({m})")

    unique = unique_stable(payoffs) if payoffs.is_strict() else None
    if unique is not None:
        print(f"Both proposing sides agree on {unique.label}")

    if args.out:
        write_json({
            'scenario': scenario.describe(),
            'stable': [m.label for m in stable_set],
            'unique': None if unique is None else unique.label,
        }, os.path.join(args.out, 'stable_set.json'))
    return 0
