"""
Matching algorithms
Gale-Shapley from either side, the greedy balanced matcher, brute-force
stable-set enumeration and max-weight assignment
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from matchmarket.config import get_config
from matchmarket.core import Matching, MarketShape, Side, blocking_pair
from matchmarket.errors import InstanceTooLargeError, PairwiseUniquenessError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StableSet:
    """Stable matchings in canonical (lexicographic provider_to_user) order"""
    matchings: tuple

    def __len__(self):
        return len(self.matchings)

    def __iter__(self):
        return iter(self.matchings)

    def __contains__(self, m):
        return m in self.matchings

    @property
    def is_unique(self):
        return len(self.matchings) == 1


def _preference_order(row):
    return [int(i) for i in np.argsort(-row, kind='stable')]


def gs_propose(payoffs, proposer_side=Side.PROVIDER):
    """
    Deferred acceptance on an evaluated payoff table

    The lowest-index free proposer with a non-empty list proposes next. An
    unmatched acceptor takes any proposal; a matched one switches only for a
    strictly higher payoff.

    Args:
        payoffs (PreferenceTable): V(., .) on every pair, strict per row
        proposer_side (Side): Side.PROVIDER or Side.USER

    Returns:
        Matching: proposer-optimal stable matching
    """
    payoffs.require_strict('payoff table')
    shape = payoffs.shape
    if proposer_side is Side.PROVIDER:
        proposer_rows, acceptor_rows = payoffs.provider_prefs, payoffs.user_prefs
        n_proposers, n_acceptors = shape.n_providers, shape.n_users
    else:
        proposer_rows, acceptor_rows = payoffs.user_prefs, payoffs.provider_prefs
        n_proposers, n_acceptors = shape.n_users, shape.n_providers

    queues = [_preference_order(proposer_rows[i]) for i in range(n_proposers)]
    next_choice = [0] * n_proposers
    engaged_to = [None] * n_proposers
    held_by = [None] * n_acceptors

    while True:
        proposer = next((i for i in range(n_proposers)
                         if engaged_to[i] is None and next_choice[i] < n_acceptors), None)
        if proposer is None:
            break
        acceptor = queues[proposer][next_choice[proposer]]
        next_choice[proposer] += 1
        current = held_by[acceptor]
        if current is None:
            held_by[acceptor] = proposer
            engaged_to[proposer] = acceptor
        elif acceptor_rows[acceptor, proposer] > acceptor_rows[acceptor, current]:
            held_by[acceptor] = proposer
            engaged_to[proposer] = acceptor
            engaged_to[current] = None

    provider_to_user = engaged_to if proposer_side is Side.PROVIDER else held_by
    return Matching(tuple(provider_to_user), shape.n_users)


def greedy_balanced(prefs):
    """
    Sorted-edge sweep on w(u, p) = psi(u, p) + psi(p, u)

    Raises:
        PairwiseUniquenessError: If two distinct pairs share a weight
    """
    shape = prefs.shape
    weights = prefs.user_prefs + prefs.provider_prefs.T
    flat = weights.ravel()
    if np.unique(flat).size != flat.size:
        raise PairwiseUniquenessError("Balanced edge weights are not pairwise-unique")

    user_taken = [False] * shape.n_users
    provider_to_user = [None] * shape.n_providers
    remaining = shape.n_providers
    for edge in np.argsort(-flat, kind='stable'):
        user, provider = divmod(int(edge), shape.n_providers)
        if user_taken[user] or provider_to_user[provider] is not None:
            continue
        user_taken[user] = True
        provider_to_user[provider] = user
        remaining -= 1
        if remaining == 0:
            break
    return Matching(tuple(provider_to_user), shape.n_users)


def candidate_count(shape):
    return math.perm(shape.n_users, shape.n_providers)


def all_matchings(shape):
    """Every feasible matching, lexicographic in provider_to_user"""
    for assignment in itertools.permutations(range(shape.n_users), shape.n_providers):
        yield Matching(assignment, shape.n_users)


def enumerate_stable(payoffs, shape=None, budget=None):
    """
    Brute-force S(V): every injective provider-to-user map without a blocking pair

    Args:
        payoffs (PreferenceTable): Evaluated payoffs
        shape (MarketShape): Defaults to the table's shape
        budget (int): Candidate limit; defaults to the configured ENUM_BUDGET

    Returns:
        StableSet
    """
    shape = shape or payoffs.shape
    budget = budget if budget is not None else get_config().ENUM_BUDGET
    candidates = candidate_count(shape)
    if candidates > budget:
        raise InstanceTooLargeError(
            f"{candidates} candidate matchings for N={shape.n_users}, L={shape.n_providers} exceeds budget {budget}"
        )
    stable = tuple(m for m in all_matchings(shape) if blocking_pair(m, payoffs) is None)
    logger.debug(f"Enumerated {candidates} candidates, {len(stable)} stable")
    return StableSet(stable)


def unique_stable(payoffs):
    """The unique stable matching if both GS sides agree, else None"""
    from_providers = gs_propose(payoffs, Side.PROVIDER)
    from_users = gs_propose(payoffs, Side.USER)
    return from_providers if from_providers == from_users else None


def max_weight_matching(weights):
    """
    Maximum total weight over feasible matchings

    Args:
        weights: N x L array, weights[u, p] for pairing u with p

    Returns:
        tuple: (Matching, total weight)
    """
    weights = np.asarray(weights, dtype=float)
    shape = MarketShape(*weights.shape)
    users, providers = linear_sum_assignment(weights, maximize=True)
    provider_to_user = [0] * shape.n_providers
    for user, provider in zip(users, providers):
        provider_to_user[provider] = int(user)
    total = math.fsum(weights[users, providers])
    return Matching(tuple(provider_to_user), shape.n_users), total


def brute_force_max_weight(weights):
    """Exhaustive counterpart of max_weight_matching for small instances"""
    weights = np.asarray(weights, dtype=float)
    shape = MarketShape(*weights.shape)
    best, best_total = None, -math.inf
    for m in all_matchings(shape):
        total = math.fsum(weights[user, provider] for user, provider in m.pairs())
        if total > best_total:
            best, best_total = m, total
    return best, best_total


def matching_weight(m, weights):
    weights = np.asarray(weights, dtype=float)
    return math.fsum(weights[user, provider] for user, provider in m.pairs())
