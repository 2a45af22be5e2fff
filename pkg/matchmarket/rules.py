"""
Cost and transfer rules
The four regimes the platform can impose, and the explicit pricing
construction that forces a unique stable matching
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from matchmarket.core import PreferenceTable, Side, _check_opposite
from matchmarket.errors import ParameterError

logger = logging.getLogger(__name__)


class RuleKind(Enum):
    ZERO = 'zero'
    PROPORTIONAL = 'proportional'
    BALANCED = 'balanced'
    PRICING = 'pricing'


@dataclass(frozen=True)
class RuleRegime:
    """The (cost, transfer) rule in force"""
    kind: RuleKind
    gamma: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    g: tuple = ()

    def __post_init__(self):
        if self.kind is RuleKind.PROPORTIONAL and not 0.0 <= self.gamma <= 1.0:
            raise ParameterError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.kind is RuleKind.PRICING:
            object.__setattr__(self, 'g', tuple(float(price) for price in self.g))
            if not self.g:
                raise ParameterError("Pricing rule needs one price per provider")

    @classmethod
    def zero(cls):
        return cls(RuleKind.ZERO)

    @classmethod
    def proportional(cls, gamma):
        return cls(RuleKind.PROPORTIONAL, gamma=float(gamma))

    @classmethod
    def balanced(cls):
        return cls(RuleKind.BALANCED)

    @classmethod
    def pricing(cls, c1, c2, g):
        return cls(RuleKind.PRICING, c1=float(c1), c2=float(c2), g=tuple(g))

    @classmethod
    def from_params(cls, params):
        return cls.pricing(params.c1, params.c2, params.g)

    def describe(self):
        """JSON-friendly summary of the rule"""
        if self.kind is RuleKind.PROPORTIONAL:
            return {'kind': self.kind.value, 'gamma': self.gamma}
        if self.kind is RuleKind.PRICING:
            return {'kind': self.kind.value, 'c1': self.c1, 'c2': self.c2, 'g': list(self.g)}
        return {'kind': self.kind.value}


@dataclass(frozen=True)
class PricingParams:
    """Pricing constants for a preference bound B"""
    bound: float
    c1: float
    c2: float
    g: tuple


def _check_prices(rule, n_providers):
    if len(rule.g) != n_providers:
        raise ParameterError(f"Pricing rule has {len(rule.g)} prices for {n_providers} providers")


def cost(rule, prefs, a, b):
    """C(a, b; psi) under the rule; zero when b is None"""
    if b is None:
        return 0.0
    _check_opposite(a, b)
    if rule.kind is RuleKind.PROPORTIONAL:
        return rule.gamma * prefs.value(a, b)
    if rule.kind is RuleKind.PRICING:
        return rule.c1 if a.side is Side.PROVIDER else rule.c2
    return 0.0


def transfer(rule, prefs, a, b):
    """T(a, b; psi), the amount a receives from b; antisymmetric in (a, b)"""
    if b is None:
        return 0.0
    _check_opposite(a, b)
    if rule.kind is RuleKind.BALANCED:
        return 0.5 * (prefs.value(b, a) - prefs.value(a, b))
    if rule.kind is RuleKind.PRICING:
        provider = a if a.side is Side.PROVIDER else b
        _check_prices(rule, prefs.shape.n_providers)
        price = rule.g[provider.index]
        return price if a.side is Side.PROVIDER else -price
    return 0.0


def payoff_value(rule, prefs, a, b):
    """
    V(a, b; psi) for an opposite-side pair

    The balanced rule is evaluated in its symmetric closed form
    (psi(a, b) + psi(b, a)) / 2 so that V(a, b) == V(b, a) holds bit for bit.
    """
    if rule.kind is RuleKind.BALANCED:
        return 0.5 * (prefs.value(a, b) + prefs.value(b, a))
    return prefs.value(a, b) - cost(rule, prefs, a, b) + transfer(rule, prefs, a, b)


def payoff_table(rule, prefs):
    """Evaluate V(., .; psi) on every opposite-side pair at once"""
    user_prefs = prefs.user_prefs
    provider_prefs = prefs.provider_prefs
    if rule.kind is RuleKind.ZERO:
        return PreferenceTable(user_prefs, provider_prefs)
    if rule.kind is RuleKind.PROPORTIONAL:
        return PreferenceTable(user_prefs - rule.gamma * user_prefs,
                               provider_prefs - rule.gamma * provider_prefs)
    if rule.kind is RuleKind.BALANCED:
        symmetric = 0.5 * (user_prefs + provider_prefs.T)
        return PreferenceTable(symmetric, symmetric.T)
    _check_prices(rule, provider_prefs.shape[0])
    g = np.asarray(rule.g)
    return PreferenceTable(user_prefs - rule.c2 - g[None, :],
                           provider_prefs - rule.c1 + g[:, None])


def settlement_tables(rule, prefs):
    """
    Cost and transfer on every pair

    Returns:
        tuple: (user_cost, provider_cost, user_transfer, provider_transfer),
        user tables N x L and provider tables L x N
    """
    user_prefs = prefs.user_prefs
    provider_prefs = prefs.provider_prefs
    user_cost = np.zeros_like(user_prefs)
    provider_cost = np.zeros_like(provider_prefs)
    user_transfer = np.zeros_like(user_prefs)
    provider_transfer = np.zeros_like(provider_prefs)
    if rule.kind is RuleKind.PROPORTIONAL:
        user_cost = rule.gamma * user_prefs
        provider_cost = rule.gamma * provider_prefs
    elif rule.kind is RuleKind.BALANCED:
        user_transfer = 0.5 * (provider_prefs.T - user_prefs)
        provider_transfer = 0.5 * (user_prefs.T - provider_prefs)
    elif rule.kind is RuleKind.PRICING:
        _check_prices(rule, provider_prefs.shape[0])
        g = np.asarray(rule.g)
        user_cost = np.full_like(user_prefs, rule.c2)
        provider_cost = np.full_like(provider_prefs, rule.c1)
        user_transfer = np.broadcast_to(-g[None, :], user_prefs.shape).copy()
        provider_transfer = np.broadcast_to(g[:, None], provider_prefs.shape).copy()
    return user_cost, provider_cost, user_transfer, provider_transfer


def pricing_defaults(bound, n_providers, ordering=None):
    """
    Explicit pricing that gives every user the same ranking of providers

    With providers listed as (p_1, ..., p_L) by `ordering`, sets c1 = 0,
    c2 = 2B(1 - L) and g(p_k) = 2B(L - k). Any user row bounded by B then
    satisfies V(u, p_k) > V(u, p_j) whenever k > j.

    Args:
        bound (float): Preference bound B > 0
        n_providers (int): L
        ordering (list): Provider indices in the order p_1..p_L; natural order by default

    Returns:
        PricingParams
    """
    if bound <= 0:
        raise ParameterError(f"Preference bound must be positive, got {bound}")
    ordering = list(range(n_providers)) if ordering is None else list(ordering)
    if sorted(ordering) != list(range(n_providers)):
        raise ParameterError(f"Ordering {ordering} is not a permutation of {n_providers} providers")
    g = [0.0] * n_providers
    for k, provider in enumerate(ordering, start=1):
        g[provider] = 2.0 * bound * (n_providers - k)
    params = PricingParams(bound=float(bound), c1=0.0, c2=2.0 * bound * (1 - n_providers), g=tuple(g))
    logger.debug(f"Pricing defaults for B={bound}, L={n_providers}: c2={params.c2}, g={params.g}")
    return params


def preference_bound(prefs):
    """Smallest B with |mu(u, .)| <= B on every user row, or 1.0 for an all-zero table"""
    bound = float(np.max(np.abs(prefs.user_prefs)))
    return bound if bound > 0 else 1.0
