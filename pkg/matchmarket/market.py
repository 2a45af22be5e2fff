"""
Market simulation loop
Each step: learners report UCB preferences, the platform matches on the
induced payoffs, matched pairs draw rewards, costs and transfers settle and
both sides update their estimates
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from matchmarket.bandit import (
    RewardDistribution,
    draw_rewards,
    init_warm_start,
    observe_matches,
    transient_preferences,
)
from matchmarket.core import MarketShape, Matching, Side, blocking_pair, matched_values
from matchmarket.errors import ParameterError
from matchmarket.rules import RuleKind, payoff_table, settlement_tables
from matchmarket.stable import gs_propose, greedy_balanced, max_weight_matching

logger = logging.getLogger(__name__)


class Matcher(Enum):
    GS = 'gs'
    GREEDY_BALANCED = 'greedy_balanced'
    PINNED_RANDOM = 'pinned_random'


@dataclass(frozen=True)
class Scenario:
    """A fully validated simulation setup"""
    shape: MarketShape
    true_prefs: object
    rule: object
    sigma2: float = 1.0
    alpha: float = 3.0
    warm_start: int = 1
    horizon: int = 1000
    proposer_side: Side = Side.PROVIDER
    matcher: Matcher = Matcher.GS
    reward_dist: RewardDistribution = RewardDistribution.GAUSSIAN
    seed: int = 0
    pinned_user: int = None
    pricing_bound: float = None
    name: str = 'scenario'

    def __post_init__(self):
        if self.true_prefs.shape != self.shape:
            raise ParameterError(f"Preference table shape {self.true_prefs.shape} does not match {self.shape}")
        self.true_prefs.require_strict('true preferences')
        if self.alpha <= 2:
            raise ParameterError(f"alpha must exceed 2, got {self.alpha}")
        if self.sigma2 < 0:
            raise ParameterError(f"sigma2 must be nonnegative, got {self.sigma2}")
        if self.warm_start < 1:
            raise ParameterError(f"warm_start must be at least 1, got {self.warm_start}")
        if self.horizon < 0:
            raise ParameterError(f"horizon must be nonnegative, got {self.horizon}")
        if self.matcher is Matcher.GREEDY_BALANCED and self.rule.kind is not RuleKind.BALANCED:
            raise ParameterError("The greedy balanced matcher requires the balanced rule")
        if self.matcher is Matcher.PINNED_RANDOM:
            if self.rule.kind is not RuleKind.PROPORTIONAL or self.rule.gamma != 1.0:
                raise ParameterError("The pinned random matcher requires the proportional rule with gamma = 1")
            if self.shape.n_providers < 2:
                raise ParameterError("The pinned random matcher needs at least two providers")
            if self.pinned_user is not None and not 0 <= self.pinned_user < self.shape.n_users:
                raise ParameterError(f"Pinned user {self.pinned_user} is out of range")
        if self.rule.kind is RuleKind.PRICING:
            if len(self.rule.g) != self.shape.n_providers:
                raise ParameterError(f"Pricing rule has {len(self.rule.g)} prices for {self.shape.n_providers} providers")
            if self.pricing_bound is not None:
                worst = float(np.max(np.abs(self.true_prefs.user_prefs)))
                if worst > self.pricing_bound:
                    raise ParameterError(f"|mu(u, .)| reaches {worst}, above the pricing bound {self.pricing_bound}")

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def with_horizon(self, horizon):
        return replace(self, horizon=int(horizon))

    def with_rule(self, rule, matcher=None):
        return replace(self, rule=rule, matcher=matcher or self.matcher)

    def describe(self):
        return {
            'name': self.name,
            'n_users': self.shape.n_users,
            'n_providers': self.shape.n_providers,
            'rule': self.rule.describe(),
            'sigma2': self.sigma2,
            'alpha': self.alpha,
            'warm_start': self.warm_start,
            'horizon': self.horizon,
            'proposer_side': self.proposer_side.value,
            'matcher': self.matcher.value,
            'reward_dist': self.reward_dist.value,
            'seed': self.seed,
        }


@dataclass(frozen=True)
class StepRecord:
    """
    Everything observable at one step

    Per-agent tuples (costs, transfers, payoffs) are ordered users then
    providers; unmatched users hold 0. rewards lists (user, provider,
    x_user, x_provider) per provider.
    """
    t: int
    transient_digest: str
    matching: Matching
    rewards: tuple
    costs: tuple
    transfers: tuple
    payoffs: tuple
    net_transfer: float
    stable: bool
    blocking: tuple
    welfare: float
    welfare_max: float


@dataclass(frozen=True)
class Trace:
    scenario: Scenario
    records: tuple
    learners: object
    warm_learners: object = field(default=None, repr=False)

    @property
    def horizon(self):
        return len(self.records)

    def matchings(self):
        return [record.matching for record in self.records]

    def unstable_steps(self):
        return [record.t for record in self.records if not record.stable]


def transient_digest(table):
    digest = hashlib.sha1()
    digest.update(np.ascontiguousarray(table.user_prefs).tobytes())
    digest.update(np.ascontiguousarray(table.provider_prefs).tobytes())
    return digest.hexdigest()


def _pinned_random(scenario, rng):
    shape = scenario.shape
    pinned = scenario.pinned_user
    if pinned is None:
        pinned = int(np.argmax(scenario.true_prefs.provider_prefs[0]))
    remaining = [u for u in range(shape.n_users) if u != pinned]
    second = remaining[int(rng.integers(len(remaining)))]
    taken = {pinned, second}
    free = (u for u in range(shape.n_users) if u not in taken)
    provider_to_user = [pinned, second] + [next(free) for _ in range(shape.n_providers - 2)]
    return Matching(tuple(provider_to_user), shape.n_users)


def _match(scenario, transient, payoffs, rng):
    if scenario.matcher is Matcher.GREEDY_BALANCED:
        return greedy_balanced(transient)
    if scenario.matcher is Matcher.PINNED_RANDOM:
        return _pinned_random(scenario, rng)
    return gs_propose(payoffs, scenario.proposer_side)


def step(learners, scenario, t, rng):
    """
    Advance the market by one step

    Args:
        learners (LearnerState): Both sides' estimates before step t
        scenario (Scenario): Market configuration
        t (int): Step index, 1-based
        rng: The run's numpy Generator

    Returns:
        tuple: (StepRecord, updated LearnerState)
    """
    shape = scenario.shape
    n_users = shape.n_users

    transient = transient_preferences(learners, t)
    payoffs = payoff_table(scenario.rule, transient)
    matching = _match(scenario, transient, payoffs, rng)

    true_prefs = scenario.true_prefs
    pairs = matching.pairs()
    users = np.array(matching.provider_to_user, dtype=np.int64)
    providers = np.arange(shape.n_providers)
    slots = n_users + providers
    pair_means = np.column_stack((true_prefs.user_prefs[users, providers],
                                  true_prefs.provider_prefs[providers, users]))
    draws = draw_rewards(rng, pair_means, scenario.sigma2, scenario.reward_dist)

    user_cost, provider_cost, user_transfer, provider_transfer = settlement_tables(scenario.rule, transient)
    costs = np.zeros(shape.n_agents)
    transfers = np.zeros(shape.n_agents)
    realized = np.zeros(shape.n_agents)
    costs[users] = user_cost[users, providers]
    costs[slots] = provider_cost[providers, users]
    transfers[users] = user_transfer[users, providers]
    transfers[slots] = provider_transfer[providers, users]
    realized[users] = draws[:, 0]
    realized[slots] = draws[:, 1]
    rewards = tuple((user, provider, float(x_user), float(x_provider))
                    for (user, provider), (x_user, x_provider) in zip(pairs, draws))
    observed = realized - costs + transfers

    updated = observe_matches(learners, pairs, draws[:, 0], draws[:, 1])

    blocking = blocking_pair(matching, payoffs)
    welfare = math.fsum(matched_values(matching, payoffs))
    _, welfare_max = max_weight_matching(payoffs.user_prefs + payoffs.provider_prefs.T)

    record = StepRecord(
        t=t,
        transient_digest=transient_digest(transient),
        matching=matching,
        rewards=rewards,
        costs=tuple(float(c) for c in costs),
        transfers=tuple(float(x) for x in transfers),
        payoffs=tuple(float(u) for u in observed),
        net_transfer=math.fsum(transfers),
        stable=blocking is None,
        blocking=blocking,
        welfare=welfare,
        welfare_max=welfare_max,
    )
    if blocking is not None and scenario.matcher is not Matcher.GS:
        logger.warning(f"Step {t}: matching {matching.label} blocked by u{blocking[0]}-p{blocking[1]}")
    logger.debug(f"Step {t}: matching {matching.label}, stable={record.stable}, W={welfare}")
    return record, updated


def run(scenario):
    """
    Simulate `scenario.horizon` steps from a fresh warm start

    One generator seeded with `scenario.seed` drives the warm start and every
    step, so a fixed seed reproduces the trace exactly.
    """
    rng = np.random.default_rng(scenario.seed)
    learners = init_warm_start(scenario.shape, scenario.sigma2, scenario.alpha, scenario.warm_start,
                               scenario.true_prefs, rng, scenario.reward_dist)
    warm = learners
    logger.info(f"Running {scenario.name} (seed {scenario.seed}) for {scenario.horizon} steps")
    records = []
    for t in range(1, scenario.horizon + 1):
        record, learners = step(learners, scenario, t, rng)
        records.append(record)
    logger.info(f"Finished {scenario.name} (seed {scenario.seed}): "
                f"{sum(1 for r in records if not r.stable)} unstable steps")
    return Trace(scenario=scenario, records=tuple(records), learners=learners, warm_learners=warm)
