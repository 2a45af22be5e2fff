"""
Preset experiments
example1-linear, prop3-adversary and ucb-check each run a seed batch and
report the regret behaviour the scenario is built to exhibit
"""

import logging
import os

from matchmarket.batch import run_batch
from matchmarket.commands import add_common_arguments, format_agents, scenario_from_args
from matchmarket.errors import ParameterError, ScenarioError
from matchmarket.metrics import (
    RegretBasis,
    classify_report,
    default_checkpoints,
    example1_split,
    extremal_matchings,
    regret_curves,
    ucb_concentration,
    welfare_ratio_series,
)
from matchmarket.report import write_json

logger = logging.getLogger(__name__)

EXAMPLE1_CHECKPOINTS = (2000, 4000, 8000, 16000)


def register(subparsers):
    parser = subparsers.add_parser('example1-linear', help='Linear optimal regret on a two-stable-matching market')
    add_common_arguments(parser)
    parser.set_defaults(handler=handle_example1)

    parser = subparsers.add_parser('prop3-adversary', help='Pinned scheduler under full proportional cost')
    add_common_arguments(parser)
    parser.set_defaults(handler=handle_prop3)

    parser = subparsers.add_parser('ucb-check', help='Suboptimal pull counts of a single UCB learner')
    add_common_arguments(parser)
    parser.set_defaults(handler=handle_ucb)


def _checkpoints(scenario_file):
    horizon = scenario_file.scenario.horizon
    if scenario_file.checkpoints:
        return list(scenario_file.checkpoints)
    if horizon == EXAMPLE1_CHECKPOINTS[-1]:
        return list(EXAMPLE1_CHECKPOINTS)
    return default_checkpoints(horizon, 4)


def _verdicts(report, which='optimal'):
    return {label: fit.verdict.value for label, fit in classify_report(report, which).items()}


def _print_curves(report, which='optimal'):
    means = report.optimal_mean if which == 'optimal' else report.pessimal_mean
    for h, row in zip(report.checkpoints, means):
        print(f"  T={h:<7} {format_agents(report.labels, row)}")


def handle_example1(args):
    scenario_file = scenario_from_args(args)
    scenario = scenario_file.scenario
    if scenario.horizon < 1:
        raise ScenarioError('horizon', "example1-linear needs a positive horizon")
    extremal = extremal_matchings(scenario.true_prefs, scenario.rule)
    if len(extremal.stable_set) != 2:
        raise ParameterError(f"Expected exactly two stable matchings, found {len(extremal.stable_set)}")
    first, second = extremal.stable_set.matchings

    traces = run_batch(scenario, scenario_file.seeds, args.threads)
    report = regret_curves(traces, extremal, scenario.rule, _checkpoints(scenario_file))
    verdicts = _verdicts(report)
    splits = example1_split(traces, first, second)

    print(f"Stable matchings: M1 = {first.label}, M2 = {second.label}")
    print(f"Mean optimal regret over {len(traces)} seeds:")
    _print_curves(report)
    print("Growth: " + ', '.join(f"{label} {verdict}" for label, verdict in verdicts.items()))
    broken = [s.seed for s in splits if not s.identity_holds]
    print(f"Steps on M1 / M2 / other (mean): "
          f"{sum(s.first for s in splits) / len(splits):.1f} / "
          f"{sum(s.second for s in splits) / len(splits):.1f} / "
          f"{sum(s.other for s in splits) / len(splits):.1f}")
    if broken:
        logger.warning(f"Split identity failed for seeds {broken}")

    out = args.out or scenario_file.output.directory
    write_json({
        'scenario': scenario.describe(),
        'stable': [first.label, second.label],
        'regret': report.to_dict(),
        'classifier': verdicts,
        'split': [{'seed': s.seed, 'M1': s.first, 'M2': s.second, 'other': s.other,
                   'off_stable': s.off_stable, 'identity_holds': s.identity_holds} for s in splits],
    }, os.path.join(out, 'example1_linear.json'))
    return 0


def handle_prop3(args):
    scenario_file = scenario_from_args(args)
    scenario = scenario_file.scenario
    if scenario.horizon < 1:
        raise ScenarioError('horizon', "prop3-adversary needs a positive horizon")
    traces = run_batch(scenario, scenario_file.seeds, args.threads)
    checkpoints = _checkpoints(scenario_file)

    payoff_report = regret_curves(traces, extremal_matchings(scenario.true_prefs, scenario.rule),
                                  scenario.rule, checkpoints)
    utility_report = regret_curves(traces, extremal_matchings(scenario.true_prefs, scenario.rule,
                                                              RegretBasis.UTILITY),
                                   scenario.rule, checkpoints)
    verdicts = _verdicts(utility_report)
    zero_welfare = all(record.welfare == 0 for trace in traces for record in trace.records)
    min_ratio = min(welfare_ratio_series(trace).min_ratio for trace in traces)

    final = utility_report.final('optimal')
    print(f"Utility-basis optimal regret at T={checkpoints[-1]}: p0 {final['p0']:.6g}, p1 {final['p1']:.6g}")
    print(f"Growth: p0 {verdicts['p0']}, p1 {verdicts['p1']}")
    print(f"Social welfare zero at every step: {zero_welfare}")

    out = args.out or scenario_file.output.directory
    write_json({
        'scenario': scenario.describe(),
        'regret': {'payoff': payoff_report.to_dict(), 'utility': utility_report.to_dict()},
        'classifier': verdicts,
        'zero_welfare': zero_welfare,
        'welfare_min_ratio': min_ratio,
    }, os.path.join(out, 'prop3_adversary.json'))
    return 0


def handle_ucb(args):
    scenario_file = scenario_from_args(args)
    scenario = scenario_file.scenario
    if scenario.shape.n_providers != 1:
        raise ScenarioError('n_providers', "ucb-check needs a single provider")
    if scenario.horizon < 1:
        raise ScenarioError('horizon', "ucb-check needs a positive horizon")
    means = scenario.true_prefs.provider_prefs[0]
    result = ucb_concentration(means, scenario.sigma2, scenario.alpha, scenario.horizon,
                               scenario_file.seeds, args.threads, scenario.reward_dist, scenario.warm_start)

    print(f"Best arm u{result.best} over {len(scenario_file.seeds)} seeds, T={scenario.horizon}")
    for arm, (mean, pulls, bound) in enumerate(zip(result.means, result.mean_pulls, result.bounds)):
        if arm == result.best:
            print(f"  u{arm}: mean {mean:.4g}, pulls {pulls:.1f} (best)")
        else:
            print(f"  u{arm}: mean {mean:.4g}, pulls {pulls:.1f}, bound {bound:.1f}, within {pulls <= bound}")

    out = args.out or scenario_file.output.directory
    write_json({
        'scenario': scenario.describe(),
        'means': list(result.means),
        'best': result.best,
        'mean_pulls': [float(p) for p in result.mean_pulls],
        'bounds': [None if arm == result.best else float(b) for arm, b in enumerate(result.bounds)],
        'within_bound': result.within_bound,
    }, os.path.join(out, 'ucb_check.json'))
    return 0
