"""
Regret, gap statistics, closed-form bounds and welfare
Post-processing over finished traces, plus the single-learner UCB reduction
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from matchmarket.bandit import RewardDistribution, draw_rewards, init_warm_start
from matchmarket.config import get_config
from matchmarket.core import MarketShape, Matching, PreferenceTable, blocking_pair, matched_values
from matchmarket.errors import (
    AmbiguousPreferencesError,
    InsufficientDataError,
    ParameterError,
    PairwiseUniquenessError,
    RuleMismatchError,
)
from matchmarket.rules import RuleKind, RuleRegime, payoff_table, preference_bound, pricing_defaults
from matchmarket.stable import enumerate_stable, greedy_balanced, unique_stable

logger = logging.getLogger(__name__)


# Gap statistics

@dataclass(frozen=True, eq=False)
class GapStats:
    """
    Preference gaps of a true-mean table

    Per-agent arrays are ordered users then providers. The rho-based fields
    are None when rho is not pairwise-unique, the pricing fields when the
    priced payoffs have no unique stable matching.
    """
    delta_min: float
    delta_max: np.ndarray
    rho: PreferenceTable = None
    delta_rho_min: float = None
    delta_rho_max_star: np.ndarray = None
    delta_B_max_star: np.ndarray = None
    bound: float = None
    balanced_matching: Matching = None
    pricing_matching: Matching = None

    def to_dict(self, labels):
        def per_agent(values):
            return None if values is None else {label: float(v) for label, v in zip(labels, values)}

        return {
            'delta_min': self.delta_min,
            'delta_max': per_agent(self.delta_max),
            'delta_rho_min': self.delta_rho_min,
            'delta_rho_max_star': per_agent(self.delta_rho_max_star),
            'delta_B_max_star': per_agent(self.delta_B_max_star),
            'bound': self.bound,
            'balanced_matching': None if self.balanced_matching is None else self.balanced_matching.label,
            'pricing_matching': None if self.pricing_matching is None else self.pricing_matching.label,
        }


def _rows(table):
    return list(table.user_prefs) + list(table.provider_prefs)


def _min_row_gap(table):
    gaps = [np.min(np.diff(np.sort(row))) for row in _rows(table) if row.size > 1]
    return float(min(gaps)) if gaps else math.inf


def _spread_to_floor(table, matching=None):
    """Per agent: (value at partner, or max of row) minus min over row and the unmatched 0"""
    values = []
    partner = None if matching is None else matched_values(matching, table)
    for i, row in enumerate(_rows(table)):
        floor = min(float(np.min(row)), 0.0)
        top = max(float(np.max(row)), 0.0) if partner is None else float(partner[i])
        values.append(top - floor)
    return np.array(values)


def _pricing_gaps(true_prefs, pricing):
    """M*,B and Delta*,B_max under a pricing rule, or (None, None) without a unique stable matching"""
    shape = true_prefs.shape
    try:
        priced = unique_stable(payoff_table(pricing, true_prefs))
    except AmbiguousPreferencesError as e:
        logger.warning(f"Pricing payoffs have ties; pricing gaps are undefined: {e}")
        return None, None
    if priced is None:
        logger.warning("Pricing payoffs admit several stable matchings; pricing gaps are undefined")
        return None, None
    price_spread = max(pricing.g) - min(pricing.g)
    user_term = np.array([price_spread] * shape.n_users + [0.0] * shape.n_providers)
    return priced, user_term + _spread_to_floor(true_prefs, priced)


def compute_gaps(true_prefs, bound=None, rule=None):
    """
    Gap statistics used by the regret bounds

    The pricing quantities follow `rule` when it is a pricing rule, and the
    default construction for B otherwise. Their user term is the spread of
    the provider prices, 2B(L - 1) for the default construction.

    Args:
        true_prefs (PreferenceTable): mu
        bound (float): Preference bound B; defaults to max |mu(u, .)|
        rule (RuleRegime): The scenario's rule

    Returns:
        GapStats
    """
    shape = true_prefs.shape
    delta_min = _min_row_gap(true_prefs)
    delta_max = _spread_to_floor(true_prefs)

    symmetric = 0.5 * (true_prefs.user_prefs + true_prefs.provider_prefs.T)
    rho = PreferenceTable(symmetric, symmetric.T)
    delta_rho_min = delta_rho_max_star = balanced = None
    try:
        balanced = greedy_balanced(true_prefs)
        delta_rho_min = _min_row_gap(rho)
        delta_rho_max_star = _spread_to_floor(rho, balanced)
    except PairwiseUniquenessError:
        logger.warning("rho is not pairwise-unique; balanced-rule gaps are undefined")

    bound = preference_bound(true_prefs) if bound is None else float(bound)
    worst = float(np.max(np.abs(true_prefs.user_prefs)))
    if worst > bound:
        raise ParameterError(f"|mu(u, .)| reaches {worst}, above the bound {bound}")
    if rule is not None and rule.kind is RuleKind.PRICING:
        pricing = rule
    else:
        pricing = RuleRegime.from_params(pricing_defaults(bound, shape.n_providers))
    priced, delta_B_max_star = _pricing_gaps(true_prefs, pricing)

    return GapStats(
        delta_min=delta_min,
        delta_max=delta_max,
        rho=rho,
        delta_rho_min=delta_rho_min,
        delta_rho_max_star=delta_rho_max_star,
        delta_B_max_star=delta_B_max_star,
        bound=bound,
        balanced_matching=balanced,
        pricing_matching=priced,
    )


# Closed-form bounds

class BoundKind(Enum):
    PROP1_PESSIMAL = 'prop1_pessimal'
    PROP2_PESSIMAL = 'prop2_pessimal'
    THM1 = 'thm1'
    THM2 = 'thm2'


def _require_gap(value, name):
    if value is None:
        raise AmbiguousPreferencesError(f"{name} is undefined for these preferences")
    if value <= 0:
        raise AmbiguousPreferencesError(f"{name} is zero; preferences have ties")
    return value


def theoretical_bound(kind, gaps, shape, sigma2, alpha, horizon, gamma=None):
    """
    Evaluate a regret bound for every agent

    Args:
        kind (BoundKind): Which bound
        gaps (GapStats): From compute_gaps
        shape (MarketShape): N and L
        sigma2 (float): Reward variance proxy
        alpha (float): Exploration exponent, > 2
        horizon (float): T >= 1
        gamma (float): Proportional cost rate, required for PROP2_PESSIMAL

    Returns:
        numpy.ndarray: Bound per agent, users then providers
    """
    if alpha <= 2:
        raise ParameterError(f"alpha must exceed 2, got {alpha}")
    if horizon < 1:
        raise ParameterError(f"horizon must be at least 1, got {horizon}")
    scale = shape.n_users ** 2 * shape.n_providers
    log_t = math.log(horizon)
    tail = alpha / (alpha - 2)

    if kind is BoundKind.THM1:
        delta = _require_gap(gaps.delta_rho_min, 'delta_rho_min')
        spread = np.asarray(gaps.delta_rho_max_star, dtype=float)
        return spread * scale * (8 * sigma2 * alpha * log_t / delta ** 2 + tail)

    delta = _require_gap(gaps.delta_min, 'delta_min')
    if kind is BoundKind.PROP1_PESSIMAL:
        spread = np.asarray(gaps.delta_max, dtype=float)
        return 2 * scale * spread * (8 * sigma2 * alpha * log_t / delta ** 2 + tail)
    if kind is BoundKind.PROP2_PESSIMAL:
        if gamma is None or not 0 <= gamma < 1:
            raise ParameterError(f"The proportional bound needs gamma in [0, 1), got {gamma}")
        keep = 1 - gamma
        spread = np.asarray(gaps.delta_max, dtype=float)
        return 2 * scale * keep * spread * (8 * sigma2 * alpha * log_t / (keep ** 2 * delta ** 2) + tail)
    if gaps.delta_B_max_star is None:
        raise AmbiguousPreferencesError("delta_B_max_star is undefined for these preferences")
    spread = np.asarray(gaps.delta_B_max_star, dtype=float)
    return 2 * spread * scale * (8 * sigma2 * alpha * log_t / delta ** 2 + tail)


# Regret

class RegretBasis(Enum):
    """What an agent's expected per-step value is measured in"""
    PAYOFF = 'payoff'
    UTILITY = 'utility'


def expected_table(true_prefs, rule, basis=RegretBasis.PAYOFF):
    if basis is RegretBasis.UTILITY:
        return true_prefs
    return payoff_table(rule, true_prefs)


@dataclass(frozen=True, eq=False)
class Extremal:
    """Each agent's best and worst true-stable matching"""
    rule: RuleRegime
    basis: RegretBasis
    stable_set: object
    expected: PreferenceTable
    optimal: tuple
    pessimal: tuple

    def values(self, which='optimal'):
        chosen = self.optimal if which == 'optimal' else self.pessimal
        return np.array([matched_values(m, self.expected)[i] for i, m in enumerate(chosen)])


def extremal_matchings(true_prefs, rule, basis=RegretBasis.PAYOFF, budget=None):
    """
    Optimal and pessimal stable matching per agent under V(., .; mu)

    Stability is always judged on the payoff table; `basis` only chooses the
    value each agent ranks the stable matchings by.

    Returns:
        Extremal
    """
    stable_set = enumerate_stable(payoff_table(rule, true_prefs), budget=budget)
    expected = expected_table(true_prefs, rule, basis)
    members = list(stable_set)
    values = np.array([matched_values(m, expected) for m in members])
    optimal = tuple(members[int(i)] for i in np.argmax(values, axis=0))
    pessimal = tuple(members[int(i)] for i in np.argmin(values, axis=0))
    logger.debug(f"{len(members)} stable matchings under {rule.kind.value}")
    return Extremal(rule=rule, basis=basis, stable_set=stable_set, expected=expected,
                    optimal=optimal, pessimal=pessimal)


def default_checkpoints(horizon, count=None):
    """Geometric grid horizon/2^(count-1), ..., horizon/2, horizon; count defaults to CHECKPOINT_COUNT"""
    count = get_config().CHECKPOINT_COUNT if count is None else count
    points = {int(round(horizon / 2 ** j)) for j in range(count)}
    return sorted(p for p in points if p >= 1)


@dataclass(frozen=True, eq=False)
class RegretReport:
    """
    Cumulative regret sampled at checkpoints

    optimal and pessimal are arrays of shape (seeds, checkpoints, agents).
    """
    checkpoints: tuple
    labels: tuple
    optimal: np.ndarray
    pessimal: np.ndarray
    extremal: Extremal

    @staticmethod
    def _mean(values):
        return values.mean(axis=0)

    @staticmethod
    def _std(values):
        if values.shape[0] < 2:
            return np.zeros(values.shape[1:])
        return values.std(axis=0, ddof=1)

    @property
    def optimal_mean(self):
        return self._mean(self.optimal)

    @property
    def pessimal_mean(self):
        return self._mean(self.pessimal)

    def curve(self, label, which='optimal'):
        """(checkpoint, seed-mean regret) pairs for one agent"""
        column = self.labels.index(label)
        means = self.optimal_mean if which == 'optimal' else self.pessimal_mean
        return [(h, float(v)) for h, v in zip(self.checkpoints, means[:, column])]

    def final(self, which='optimal'):
        means = self.optimal_mean if which == 'optimal' else self.pessimal_mean
        return {label: float(v) for label, v in zip(self.labels, means[-1])} if self.checkpoints else {}

    def to_dict(self):
        out = {'checkpoints': list(self.checkpoints), 'basis': self.extremal.basis.value}
        for which, values in (('optimal', self.optimal), ('pessimal', self.pessimal)):
            mean, std = self._mean(values), self._std(values)
            out[which] = {
                label: {'mean': [float(v) for v in mean[:, i]], 'std': [float(v) for v in std[:, i]]}
                for i, label in enumerate(self.labels)
            }
        return out


def _per_step_values(trace, table):
    n_users = trace.scenario.shape.n_users
    index = {}
    steps = np.empty(len(trace.records), dtype=np.int64)
    for i, record in enumerate(trace.records):
        steps[i] = index.setdefault(record.matching.provider_to_user, len(index))
    values = np.array([matched_values(Matching(key, n_users), table) for key in index])
    if len(index) == 0:
        return np.zeros((0, trace.scenario.shape.n_agents))
    return values[steps]


def regret_curves(traces, extremal, rule, checkpoints=None):
    """
    Cumulative optimal and pessimal regret from true-mean increments

    Args:
        traces (list): One or more traces of the same scenario and horizon
        extremal (Extremal): From extremal_matchings
        rule (RuleRegime): Rule the report is requested for
        checkpoints (list): Horizons to sample; default_checkpoints(T) by default

    Returns:
        RegretReport
    """
    traces = [traces] if not isinstance(traces, (list, tuple)) else list(traces)
    if not traces:
        raise InsufficientDataError("No traces to report on")
    horizon = traces[0].horizon
    for trace in traces:
        if trace.scenario.rule != rule or extremal.rule != rule:
            raise RuleMismatchError(
                f"Trace rule {trace.scenario.rule.kind.value} does not match report rule {rule.kind.value}"
            )
        if trace.horizon != horizon:
            raise ParameterError("All traces in a report must share one horizon")
    checkpoints = default_checkpoints(horizon) if checkpoints is None else sorted(int(h) for h in checkpoints)
    if any(h < 1 or h > horizon for h in checkpoints):
        raise ParameterError(f"Checkpoints must lie in [1, {horizon}], got {checkpoints}")

    shape = traces[0].scenario.shape
    best = extremal.values('optimal')
    worst = extremal.values('pessimal')
    at = np.array(checkpoints, dtype=np.int64) - 1
    optimal, pessimal = [], []
    for trace in traces:
        per_step = _per_step_values(trace, extremal.expected)
        optimal.append(np.cumsum(best[None, :] - per_step, axis=0)[at] if len(at) else np.zeros((0, shape.n_agents)))
        pessimal.append(np.cumsum(worst[None, :] - per_step, axis=0)[at] if len(at) else np.zeros((0, shape.n_agents)))
    return RegretReport(
        checkpoints=tuple(checkpoints),
        labels=tuple(shape.agent_labels()),
        optimal=np.array(optimal),
        pessimal=np.array(pessimal),
        extremal=extremal,
    )


# Welfare

@dataclass(frozen=True, eq=False)
class WelfareSeries:
    ratios: np.ndarray
    degenerate: np.ndarray
    min_ratio: float

    @property
    def degenerate_steps(self):
        return [int(t) + 1 for t in np.flatnonzero(self.degenerate)]


def welfare_ratio(welfare, welfare_max):
    if welfare_max > 0:
        return max(0.0, welfare / welfare_max)
    return 1.0 if welfare == welfare_max else 0.0


def welfare_ratio_series(trace):
    """Per-step W_t / W_max with W_t = 0 steps flagged degenerate"""
    ratios = np.array([welfare_ratio(r.welfare, r.welfare_max) for r in trace.records])
    degenerate = np.array([r.welfare == 0 for r in trace.records], dtype=bool)
    if degenerate.any():
        logger.warning(f"{int(degenerate.sum())} of {len(degenerate)} steps have zero social welfare")
    min_ratio = float(ratios.min()) if ratios.size else 1.0
    return WelfareSeries(ratios=ratios, degenerate=degenerate, min_ratio=min_ratio)


# Growth classification

class Growth(Enum):
    LOGARITHMIC = 'logarithmic'
    LINEAR = 'linear'
    INDETERMINATE = 'indeterminate'


@dataclass(frozen=True)
class GrowthFit:
    verdict: Growth
    elasticities: tuple
    log_fit: tuple
    linear_fit: tuple
    log_residual: float
    linear_residual: float
    bounded: bool = False


LINEAR_ELASTICITY = 0.75
LOG_ELASTICITY = 0.35
FLAT_ELASTICITY = 0.1
# |R(h)| at or below this share of step_scale * h counts as bounded
BOUNDED_FRACTION = 1e-3


def _least_squares(x, y):
    coef = np.polyfit(x, y, 1)
    residual = float(np.sum((np.polyval(coef, x) - y) ** 2))
    return (float(coef[0]), float(coef[1])), residual


def growth_classifier(curve, eps=1e-12, step_scale=None):
    """
    Heuristic finite-horizon growth verdict for a regret curve

    Over the last half of the checkpoint intervals, the local elasticity
    d ln R / d ln h is about 1 for linear growth and about 1 / ln h for
    logarithmic growth. A curve whose last half stays at or below zero, or
    within BOUNDED_FRACTION of step_scale * h, is bounded and reads as
    logarithmic whatever its elasticities do.

    Args:
        curve (list): (horizon, value) pairs, at least four
        step_scale (float): Largest possible per-step increment of the curve

    Returns:
        GrowthFit
    """
    points = sorted((float(h), float(v)) for h, v in curve)
    if len(points) < 4:
        raise InsufficientDataError(f"Need at least 4 checkpoints, got {len(points)}")
    h = np.array([p[0] for p in points])
    v = np.array([p[1] for p in points])
    if np.any(h <= 0) or np.any(np.diff(h) <= 0):
        raise ParameterError("Checkpoints must be positive and distinct")

    slopes = np.diff(v) / np.diff(h)
    elasticities = slopes * h[1:] / np.maximum(np.abs(v[1:]), eps)
    tail = elasticities[len(elasticities) // 2:]

    log_fit, log_residual = _least_squares(np.log(h), v)
    linear_fit, linear_residual = _least_squares(h, v)

    later_h, later_v = h[len(h) // 2:], v[len(v) // 2:]
    bounded = bool(np.all(later_v <= 0))
    if step_scale is not None and step_scale > 0:
        bounded = bounded or bool(np.all(np.abs(later_v) <= BOUNDED_FRACTION * step_scale * later_h))

    if bounded:
        verdict = Growth.LOGARITHMIC
    elif np.all(tail >= LINEAR_ELASTICITY):
        verdict = Growth.LINEAR
    elif np.all(tail <= LOG_ELASTICITY) and (log_residual <= linear_residual or np.all(tail <= FLAT_ELASTICITY)):
        verdict = Growth.LOGARITHMIC
    else:
        verdict = Growth.INDETERMINATE
    return GrowthFit(
        verdict=verdict,
        elasticities=tuple(float(e) for e in elasticities),
        log_fit=log_fit,
        linear_fit=linear_fit,
        log_residual=log_residual,
        linear_residual=linear_residual,
        bounded=bounded,
    )


def classify_report(report, which='optimal'):
    """Growth verdict per agent on the seed-mean curves"""
    scales = _spread_to_floor(report.extremal.expected)
    return {label: growth_classifier(report.curve(label, which), step_scale=float(scale))
            for label, scale in zip(report.labels, scales)}


# Experiment summaries

@dataclass(frozen=True)
class MatchingSplit:
    seed: int
    horizon: int
    first: int
    second: int
    other: int
    off_stable: int

    @property
    def identity_holds(self):
        return self.first + self.second == self.horizon - self.off_stable


def example1_split(traces, first, second):
    """
    Count steps playing each of two matchings

    off_stable counts steps whose matching is not stable under the true
    payoffs of the trace's rule.
    """
    splits = []
    for trace in traces:
        true_payoffs = payoff_table(trace.scenario.rule, trace.scenario.true_prefs)
        counts = {first: 0, second: 0}
        other = off_stable = 0
        verdicts = {}
        for record in trace.records:
            m = record.matching
            if m in counts:
                counts[m] += 1
            else:
                other += 1
            if m not in verdicts:
                verdicts[m] = blocking_pair(m, true_payoffs) is None
            off_stable += not verdicts[m]
        splits.append(MatchingSplit(seed=trace.scenario.seed, horizon=trace.horizon, first=counts[first],
                                    second=counts[second], other=other, off_stable=off_stable))
    return splits


@dataclass(frozen=True, eq=False)
class UcbConcentration:
    means: tuple
    best: int
    mean_pulls: np.ndarray
    bounds: np.ndarray

    @property
    def within_bound(self):
        return [bool(p <= b) for i, (p, b) in enumerate(zip(self.mean_pulls, self.bounds)) if i != self.best]


def single_learner_pulls(scenario):
    """
    Pull counts of the lone provider in a one-provider zero-rule market

    Equals `run(scenario).learners.provider_counts[0]` minus the warm start:
    the generator is consumed in the same order (warm start, then one
    (user, provider) reward pair per step) and the provider's GS proposal is
    its top UCB index, which the unmatched user accepts. Skips the per-step
    record, digest and welfare oracle.
    """
    if scenario.shape.n_providers != 1 or scenario.rule.kind is not RuleKind.ZERO:
        raise ParameterError("The single-learner reduction needs one provider and the zero rule")
    rng = np.random.default_rng(scenario.seed)
    learners = init_warm_start(scenario.shape, scenario.sigma2, scenario.alpha, scenario.warm_start,
                               scenario.true_prefs, rng, scenario.reward_dist)
    counts = learners.provider_counts[0].copy()
    sums = learners.provider_sums[0].copy()
    user_means = scenario.true_prefs.user_prefs[:, 0]
    arm_means = scenario.true_prefs.provider_prefs[0]
    for t in range(1, scenario.horizon + 1):
        numerator = 2.0 * learners.sigma2 * learners.alpha * math.log(t)
        arm = int(np.argmax(sums / counts + np.sqrt(numerator / counts)))
        draws = draw_rewards(rng, np.array([[user_means[arm], arm_means[arm]]]), scenario.sigma2,
                             scenario.reward_dist)
        counts[arm] += 1
        sums[arm] += draws[0, 1]
    return counts - scenario.warm_start


def ucb_concentration(means=(0.9, 0.8, 0.7, 0.6, 0.5), sigma2=1.0, alpha=3.0, horizon=10_000,
                      seeds=range(50), threads=None, reward_dist=None, warm_start=1):
    """
    Single learner facing K arms

    One provider ranks K users by UCB index under the zero rule and GS; the
    users' rows are trivial. Pulls exclude the warm-start samples.

    Returns:
        UcbConcentration
    """
    from matchmarket.batch import map_seeds
    from matchmarket.market import Scenario

    means = tuple(float(m) for m in means)
    k = len(means)
    if k < 2:
        raise ParameterError("Need at least two arms")
    prefs = PreferenceTable(np.zeros((k, 1)), np.array([means]))
    scenario = Scenario(
        shape=MarketShape(k, 1),
        true_prefs=prefs,
        rule=RuleRegime.zero(),
        sigma2=sigma2,
        alpha=alpha,
        warm_start=warm_start,
        horizon=horizon,
        reward_dist=reward_dist or RewardDistribution.GAUSSIAN,
        name='ucb-arms',
    )
    pulls = np.array(map_seeds(single_learner_pulls, scenario, list(seeds), threads), dtype=float)
    best = int(np.argmax(means))
    gaps = np.array([means[best] - m for m in means])
    with np.errstate(divide='ignore'):
        bounds = np.where(gaps > 0, 8 * sigma2 * alpha * math.log(horizon) / gaps ** 2 + alpha / (alpha - 2), np.inf)
    return UcbConcentration(means=means, best=best, mean_pulls=pulls.mean(axis=0), bounds=bounds)
