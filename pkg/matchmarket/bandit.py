"""
UCB learning state
Warm-start samples, visit counts, empirical means and the transient
preference index every agent reports to the platform
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from matchmarket.core import PreferenceTable, Side, _check_opposite
from matchmarket.errors import MissingWarmStartError, ParameterError

logger = logging.getLogger(__name__)


class RewardDistribution(Enum):
    """Sub-Gaussian reward families with variance proxy sigma2"""
    GAUSSIAN = 'gaussian'
    RADEMACHER = 'rademacher'
    UNIFORM = 'uniform'


def draw_rewards(rng, means, sigma2, dist=RewardDistribution.GAUSSIAN):
    """
    Draw one reward per entry of `means`

    Consumes the generator in C order over `means`. A zero sigma2 returns the
    means unchanged and consumes nothing.
    """
    means = np.asarray(means, dtype=float)
    if sigma2 == 0:
        return means.copy()
    sigma = math.sqrt(sigma2)
    if dist is RewardDistribution.GAUSSIAN:
        return rng.normal(means, sigma)
    if dist is RewardDistribution.RADEMACHER:
        signs = 2 * rng.integers(0, 2, size=means.shape) - 1
        return means + sigma * signs
    return means + rng.uniform(-sigma, sigma, size=means.shape)


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class LearnerState:
    """
    Per-directed-pair sample counts and reward sums

    user_counts[u, p] is T(u, p) and provider_counts[p, u] is T(p, u); sums
    include the warm-start samples.
    """
    user_counts: np.ndarray
    user_sums: np.ndarray
    provider_counts: np.ndarray
    provider_sums: np.ndarray
    sigma2: float
    alpha: float
    warm_start: int

    def __post_init__(self):
        object.__setattr__(self, 'user_counts', _frozen(self.user_counts, np.int64))
        object.__setattr__(self, 'provider_counts', _frozen(self.provider_counts, np.int64))
        object.__setattr__(self, 'user_sums', _frozen(self.user_sums, float))
        object.__setattr__(self, 'provider_sums', _frozen(self.provider_sums, float))

    def _tables(self, side):
        if side is Side.USER:
            return self.user_counts, self.user_sums
        return self.provider_counts, self.provider_sums

    def count(self, a, b):
        _check_opposite(a, b)
        return int(self._tables(a.side)[0][a.index, b.index])

    def total(self, a, b):
        _check_opposite(a, b)
        return float(self._tables(a.side)[1][a.index, b.index])

    def mean(self, a, b):
        count = self.count(a, b)
        if count == 0:
            raise MissingWarmStartError(f"No samples for pair ({a.label}, {b.label})")
        return self.total(a, b) / count

    def means(self):
        """Empirical mean table; every count must be positive"""
        self._require_samples()
        return PreferenceTable(self.user_sums / self.user_counts,
                               self.provider_sums / self.provider_counts)

    def counts_symmetric(self):
        return bool(np.array_equal(self.user_counts, self.provider_counts.T))

    def _require_samples(self):
        if np.any(self.user_counts == 0) or np.any(self.provider_counts == 0):
            raise MissingWarmStartError("Learner state has pairs with no samples")


def _validate(sigma2, alpha, warm_start):
    if alpha <= 2:
        raise ParameterError(f"alpha must exceed 2, got {alpha}")
    if sigma2 < 0:
        raise ParameterError(f"sigma2 must be nonnegative, got {sigma2}")
    if warm_start < 1:
        raise ParameterError(f"Warm start must be at least one sample per pair, got {warm_start}")


def init_warm_start(shape, sigma2, alpha, warm_start, true_means, rng,
                    reward_dist=RewardDistribution.GAUSSIAN):
    """
    Seed every directed pair with `warm_start` reward samples

    Draws run in pair order (provider, then user), user direction first,
    `warm_start` samples each.

    Args:
        shape (MarketShape): Market dimensions
        sigma2 (float): Reward variance proxy
        alpha (float): Exploration exponent, > 2
        warm_start (int): T0 >= 1
        true_means (PreferenceTable): mu
        rng: numpy Generator, or an int seed
        reward_dist (RewardDistribution): Reward family

    Returns:
        LearnerState
    """
    _validate(sigma2, alpha, warm_start)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n_users, n_providers = shape.n_users, shape.n_providers

    means = np.empty((n_providers, n_users, 2, warm_start))
    means[:, :, 0, :] = true_means.user_prefs.T[:, :, None]
    means[:, :, 1, :] = true_means.provider_prefs[:, :, None]
    samples = draw_rewards(rng, means, sigma2, reward_dist)
    sums = samples.sum(axis=3)

    counts = np.full((n_users, n_providers), warm_start, dtype=np.int64)
    state = LearnerState(
        user_counts=counts,
        user_sums=sums[:, :, 0].T,
        provider_counts=counts.T,
        provider_sums=sums[:, :, 1],
        sigma2=float(sigma2),
        alpha=float(alpha),
        warm_start=int(warm_start),
    )
    logger.debug(f"Warm start: {warm_start} samples on each of {2 * n_users * n_providers} directed pairs")
    return state


def observe_many(state, observations):
    """
    Apply several (a, b, x) observations at once

    Returns:
        LearnerState: a new state; `state` is not modified
    """
    user_counts = state.user_counts.copy()
    user_sums = state.user_sums.copy()
    provider_counts = state.provider_counts.copy()
    provider_sums = state.provider_sums.copy()
    for a, b, x in observations:
        _check_opposite(a, b)
        if a.side is Side.USER:
            user_counts[a.index, b.index] += 1
            user_sums[a.index, b.index] += x
        else:
            provider_counts[a.index, b.index] += 1
            provider_sums[a.index, b.index] += x
    return replace(state, user_counts=user_counts, user_sums=user_sums,
                   provider_counts=provider_counts, provider_sums=provider_sums)


def observe_matches(state, pairs, user_rewards, provider_rewards):
    """
    One sample in each direction for every matched (user, provider) pair

    Pairs of a feasible matching are distinct, so every touched entry gets
    exactly one addition and the result equals observe_many on the same data.
    """
    users = np.array([user for user, _ in pairs], dtype=np.int64)
    providers = np.array([provider for _, provider in pairs], dtype=np.int64)
    user_counts = state.user_counts.copy()
    user_sums = state.user_sums.copy()
    provider_counts = state.provider_counts.copy()
    provider_sums = state.provider_sums.copy()
    user_counts[users, providers] += 1
    user_sums[users, providers] += user_rewards
    provider_counts[providers, users] += 1
    provider_sums[providers, users] += provider_rewards
    return replace(state, user_counts=user_counts, user_sums=user_sums,
                   provider_counts=provider_counts, provider_sums=provider_sums)


def observe(state, a, b, x):
    """Record one reward x that a received from b"""
    return observe_many(state, [(a, b, x)])


def _bonus_numerator(state, t):
    if t < 1:
        raise ParameterError(f"Time index must be at least 1, got {t}")
    return 2.0 * state.sigma2 * state.alpha * math.log(t)


def ucb_index(state, a, b, t):
    """nu_t(a, b) = mean + sqrt(2 sigma2 alpha ln(t) / T(a, b)); zero when b is None"""
    if b is None:
        return 0.0
    numerator = _bonus_numerator(state, t)
    count = state.count(a, b)
    if count == 0:
        raise MissingWarmStartError(f"No samples for pair ({a.label}, {b.label})")
    return state.total(a, b) / count + math.sqrt(numerator / count)


def transient_preferences(state, t):
    """The full nu_t table, evaluated entrywise as ucb_index does"""
    numerator = _bonus_numerator(state, t)
    state._require_samples()
    user_nu = state.user_sums / state.user_counts + np.sqrt(numerator / state.user_counts)
    provider_nu = state.provider_sums / state.provider_counts + np.sqrt(numerator / state.provider_counts)
    return PreferenceTable(user_nu, provider_nu)
