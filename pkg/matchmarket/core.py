"""
Core vocabulary for the matching market
Agent identities, preference tables, matchings, payoff evaluation and
stability certification
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from matchmarket.errors import (
    AmbiguousPreferencesError,
    InfeasibleMatchingError,
    InvalidPairError,
    ParameterError,
)

logger = logging.getLogger(__name__)


class Side(Enum):
    USER = 'user'
    PROVIDER = 'provider'

    @property
    def other(self):
        return Side.PROVIDER if self is Side.USER else Side.USER

    @property
    def prefix(self):
        return 'u' if self is Side.USER else 'p'


@dataclass(frozen=True)
class AgentId:
    """A user or provider, identified by side and zero-based index"""
    side: Side
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ParameterError(f"Agent index must be nonnegative, got {self.index}")

    @classmethod
    def user(cls, index):
        return cls(Side.USER, index)

    @classmethod
    def provider(cls, index):
        return cls(Side.PROVIDER, index)

    @classmethod
    def parse(cls, label):
        """Build an agent from a label such as 'u0' or 'p2'"""
        if len(label) < 2 or label[0] not in 'up' or not label[1:].isdigit():
            raise ParameterError(f"Invalid agent label: {label!r}")
        side = Side.USER if label[0] == 'u' else Side.PROVIDER
        return cls(side, int(label[1:]))

    @property
    def label(self):
        return f"{self.side.prefix}{self.index}"

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class MarketShape:
    """N users and L providers, with N >= L >= 1"""
    n_users: int
    n_providers: int

    def __post_init__(self):
        if self.n_providers < 1:
            raise ParameterError(f"Need at least one provider, got {self.n_providers}")
        if self.n_users < self.n_providers:
            raise ParameterError(
                f"Need at least as many users as providers, got N={self.n_users}, L={self.n_providers}"
            )

    @property
    def n_agents(self):
        return self.n_users + self.n_providers

    def agents(self):
        """Users first, then providers; the canonical per-agent ordering"""
        return ([AgentId.user(u) for u in range(self.n_users)]
                + [AgentId.provider(p) for p in range(self.n_providers)])

    def agent_labels(self):
        return [agent.label for agent in self.agents()]


def _frozen(array):
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


def _row_has_ties(row):
    ordered = np.sort(row)
    return bool(np.any(ordered[1:] == ordered[:-1]))


@dataclass(frozen=True, eq=False)
class PreferenceTable:
    """
    A real-valued function on (agent, counterpart) pairs

    user_prefs[u, p] holds psi(u, p) and provider_prefs[p, u] holds psi(p, u);
    psi(a, None) is 0 for every agent. The same type carries true means,
    transient UCB preferences and evaluated payoff tables.
    """
    user_prefs: np.ndarray
    provider_prefs: np.ndarray
    strict: bool = False

    def __post_init__(self):
        user_prefs = _frozen(self.user_prefs)
        provider_prefs = _frozen(self.provider_prefs)
        if user_prefs.ndim != 2 or provider_prefs.ndim != 2:
            raise ParameterError("Preference tables must be two-dimensional")
        if provider_prefs.shape != user_prefs.shape[::-1]:
            raise ParameterError(
                f"Provider table shape {provider_prefs.shape} does not transpose user table shape {user_prefs.shape}"
            )
        if not (np.all(np.isfinite(user_prefs)) and np.all(np.isfinite(provider_prefs))):
            raise ParameterError("Preference tables must be finite")
        object.__setattr__(self, '_shape', MarketShape(*user_prefs.shape))
        object.__setattr__(self, 'user_prefs', user_prefs)
        object.__setattr__(self, 'provider_prefs', provider_prefs)
        if self.strict:
            self.require_strict()

    @property
    def shape(self):
        return self._shape

    def row(self, agent):
        table = self.user_prefs if agent.side is Side.USER else self.provider_prefs
        return table[agent.index]

    def value(self, a, b):
        """psi(a, b), with psi(a, None) = 0"""
        if b is None:
            return 0.0
        _check_opposite(a, b)
        return float(self.row(a)[b.index])

    def tied_rows(self):
        """Agents whose rows contain a repeated value"""
        tied = [AgentId.user(u) for u, row in enumerate(self.user_prefs) if _row_has_ties(row)]
        tied += [AgentId.provider(p) for p, row in enumerate(self.provider_prefs) if _row_has_ties(row)]
        return tied

    def is_strict(self):
        return not self.tied_rows()

    def require_strict(self, context='preferences'):
        tied = self.tied_rows()
        if tied:
            names = ', '.join(agent.label for agent in tied)
            raise AmbiguousPreferencesError(f"Ties in {context} for agents: {names}")
        return self

    def with_strict(self):
        return PreferenceTable(self.user_prefs, self.provider_prefs, strict=True)


@dataclass(frozen=True)
class Matching:
    """
    Assignment of providers to users

    provider_to_user[p] is the user matched to provider p. The matching is
    feasible when those users are pairwise distinct and below n_users.
    """
    provider_to_user: tuple
    n_users: int

    def __post_init__(self):
        object.__setattr__(self, 'provider_to_user', tuple(int(u) for u in self.provider_to_user))

    @property
    def n_providers(self):
        return len(self.provider_to_user)

    @property
    def shape(self):
        return MarketShape(self.n_users, self.n_providers)

    @cached_property
    def user_to_provider(self):
        if feasibility_check(self, self.shape):
            raise InfeasibleMatchingError(f"Matching {self.label} is not feasible")
        inverse = [None] * self.n_users
        for provider, user in enumerate(self.provider_to_user):
            inverse[user] = provider
        return tuple(inverse)

    def partner(self, agent):
        """The agent matched to `agent`, or None when unmatched"""
        if agent.side is Side.PROVIDER:
            return AgentId.user(self.provider_to_user[agent.index])
        provider = self.user_to_provider[agent.index]
        return None if provider is None else AgentId.provider(provider)

    def pairs(self):
        """(user, provider) index pairs in provider order"""
        return [(user, provider) for provider, user in enumerate(self.provider_to_user)]

    @property
    def label(self):
        return '-'.join(str(user) for user in self.provider_to_user)

    def __str__(self):
        return ', '.join(f"u{user}-p{provider}" for user, provider in self.pairs())


def _check_opposite(a, b):
    if a.side is b.side:
        raise InvalidPairError(f"Agents {a.label} and {b.label} are on the same side")


def feasibility_check(m, shape):
    """
    List the reasons a matching is not in the feasible set

    Args:
        m (Matching): Candidate matching
        shape (MarketShape): Market dimensions

    Returns:
        list: Human-readable violations; empty when feasible
    """
    violations = []
    if m.n_providers != shape.n_providers:
        violations.append(f"matching covers {m.n_providers} providers, market has {shape.n_providers}")
    if m.n_users != shape.n_users:
        violations.append(f"matching sized for {m.n_users} users, market has {shape.n_users}")
    seen = {}
    for provider, user in enumerate(m.provider_to_user):
        if user < 0 or user >= shape.n_users:
            violations.append(f"provider {provider} matched to out-of-range user {user}")
            continue
        seen.setdefault(user, []).append(provider)
    for user, providers in sorted(seen.items()):
        if len(providers) > 1:
            violations.append(f"user {user} matched twice (providers {', '.join(map(str, providers))})")
    return violations


def payoff(rule, prefs, a, b):
    """V(a, b; psi) = psi(a, b) - C(a, b; psi) + T(a, b; psi); zero when b is None"""
    from matchmarket.rules import payoff_value

    if b is None:
        return 0.0
    _check_opposite(a, b)
    return payoff_value(rule, prefs, a, b)


def matched_values(m, table):
    """
    Per-agent table value at the matched partner

    Returns a length N+L array ordered users then providers; unmatched users
    read 0.
    """
    n_users = table.user_prefs.shape[0]
    values = np.zeros(n_users + m.n_providers)
    for provider, user in enumerate(m.provider_to_user):
        values[user] = table.user_prefs[user, provider]
        values[n_users + provider] = table.provider_prefs[provider, user]
    return values


def blocking_pair(m, payoffs):
    """
    Find a (user, provider) pair that would both rather defect

    Scans users in ascending order, then providers, and returns the first
    pair with V(u, p) > V(u, m(u)) and V(p, u) > V(p, m(p)).

    Args:
        m (Matching): A feasible matching
        payoffs (PreferenceTable): Evaluated payoffs on all pairs

    Returns:
        tuple: (user, provider) indices, or None when m is stable
    """
    shape = payoffs.shape
    violations = feasibility_check(m, shape)
    if violations:
        raise InfeasibleMatchingError(f"Cannot test stability of an infeasible matching: {'; '.join(violations)}")

    current = matched_values(m, payoffs)
    user_current = current[:shape.n_users]
    provider_current = current[shape.n_users:]
    blocks = (payoffs.user_prefs > user_current[:, None]) & (payoffs.provider_prefs.T > provider_current[None, :])
    hits = np.argwhere(blocks)
    if len(hits) == 0:
        return None
    user, provider = hits[0]
    return int(user), int(provider)


def is_stable(m, payoffs):
    return blocking_pair(m, payoffs) is None


def rank(prefs, a, b):
    """
    Ordinal position of b in a's row: 1 plus the number of strictly better counterparts

    Raises:
        AmbiguousPreferencesError: If a's row has ties
    """
    _check_opposite(a, b)
    row = prefs.row(a)
    if _row_has_ties(row):
        raise AmbiguousPreferencesError(f"Rank is ambiguous: ties in row of {a.label}")
    return int(np.sum(row > row[b.index])) + 1
