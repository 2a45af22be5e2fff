"""
Artifact writers
Per-seed trace CSV files and the summary JSON
"""

import csv
import json
import logging
import os

from matchmarket.errors import InsufficientDataError
from matchmarket.metrics import (
    BoundKind,
    RegretBasis,
    classify_report,
    compute_gaps,
    extremal_matchings,
    regret_curves,
    theoretical_bound,
    welfare_ratio_series,
)
from matchmarket.rules import RuleKind

logger = logging.getLogger(__name__)


def trace_header(shape):
    return (['t', 'matching']
            + [f"U_{label}" for label in shape.agent_labels()]
            + ['W_t', 'W_max', 'stable'])


def trace_rows(trace):
    for record in trace.records:
        yield ([record.t, record.matching.label]
               + [repr(u) for u in record.payoffs]
               + [repr(record.welfare), repr(record.welfare_max), 'true' if record.stable else 'false'])


def write_trace_csv(trace, path):
    """Write one row per step after the header"""
    _ensure_parent(path)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(trace_header(trace.scenario.shape))
        writer.writerows(trace_rows(trace))
    logger.info(f"Wrote trace for seed {trace.scenario.seed} to {path}")
    return path


def write_json(data, path):
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, indent=2)
        handle.write('\n')
    logger.info(f"Wrote {path}")
    return path


def _ensure_parent(path):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def bound_table(scenario, gaps):
    """Every bound that applies to the scenario's parameters, per agent"""
    if scenario.horizon < 1:
        return {}
    labels = scenario.shape.agent_labels()
    kinds = [BoundKind.PROP1_PESSIMAL]
    if gaps.delta_B_max_star is not None:
        kinds.append(BoundKind.THM2)
    if scenario.rule.kind is RuleKind.PROPORTIONAL and scenario.rule.gamma < 1:
        kinds.append(BoundKind.PROP2_PESSIMAL)
    if gaps.delta_rho_min is not None:
        kinds.append(BoundKind.THM1)
    table = {}
    for kind in kinds:
        values = theoretical_bound(kind, gaps, scenario.shape, scenario.sigma2, scenario.alpha,
                                   scenario.horizon, gamma=scenario.rule.gamma)
        table[kind.value] = {label: float(v) for label, v in zip(labels, values)}
    return table


def summarize(scenario_file, traces, checkpoints=None, basis=RegretBasis.PAYOFF):
    """
    Summary document for a batch of traces of one scenario

    Keys: scenario, gaps, bounds, regret (optimal and pessimal), classifier,
    welfare_min_ratio.
    """
    scenario = scenario_file.scenario
    labels = scenario.shape.agent_labels()
    gaps = compute_gaps(scenario.true_prefs, bound=scenario.pricing_bound, rule=scenario.rule)

    summary = {
        'scenario': dict(scenario.describe(), seeds=[t.scenario.seed for t in traces]),
        'gaps': gaps.to_dict(labels),
        'bounds': bound_table(scenario, gaps),
        'regret': {'optimal': {}, 'pessimal': {}},
        'classifier': {},
        'welfare_min_ratio': None,
    }
    if scenario.horizon < 1 or not traces:
        return summary

    checkpoints = checkpoints or scenario_file.checkpoints
    extremal = extremal_matchings(scenario.true_prefs, scenario.rule, basis)
    report = regret_curves(traces, extremal, scenario.rule, checkpoints)
    curves = report.to_dict()
    summary['regret'] = {
        'basis': curves['basis'],
        'checkpoints': curves['checkpoints'],
        'optimal': curves['optimal'],
        'pessimal': curves['pessimal'],
    }
    try:
        verdicts = classify_report(report, 'optimal')
        summary['classifier'] = {label: fit.verdict.value for label, fit in verdicts.items()}
    except InsufficientDataError as e:
        logger.warning(f"Skipping growth classification: {e}")
    summary['welfare_min_ratio'] = min(welfare_ratio_series(trace).min_ratio for trace in traces)
    return summary
