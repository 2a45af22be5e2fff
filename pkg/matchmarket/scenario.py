"""
Scenario files
Load and validate JSON scenario descriptions, expand presets and generate
random strict preference tables
"""

import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from matchmarket.bandit import RewardDistribution
from matchmarket.config import get_config
from matchmarket.core import MarketShape, Matching, PreferenceTable, Side
from matchmarket.errors import MatchMarketError, ScenarioError
from matchmarket.market import Matcher, Scenario
from matchmarket.rules import RuleRegime, preference_bound, pricing_defaults

logger = logging.getLogger(__name__)

RANK_VALUES = {1: 0.3, 2: 0.2, 3: 0.1}
EXAMPLE1_USER_RANKS = [[3, 2, 1], [2, 3, 1], [1, 2, 3]]
EXAMPLE1_PROVIDER_RANKS = [[1, 2, 3], [1, 2, 3], [3, 2, 1]]
EXAMPLE1_USER_OFFSETS = [0.0, 0.01, 0.02]
EXAMPLE1_PROVIDER_OFFSETS = [0.0, 0.003, 0.006]


def example1_preferences():
    """
    The 3 x 3 instance with exactly two stable matchings under the zero rule

    Ranks map to 0.3 / 0.2 / 0.1; the per-agent offsets keep every row's
    order and make rho pairwise-unique.
    """
    users = [[RANK_VALUES[r] + EXAMPLE1_USER_OFFSETS[u] for r in ranks]
             for u, ranks in enumerate(EXAMPLE1_USER_RANKS)]
    providers = [[RANK_VALUES[r] + EXAMPLE1_PROVIDER_OFFSETS[p] for r in ranks]
                 for p, ranks in enumerate(EXAMPLE1_PROVIDER_RANKS)]
    return PreferenceTable(np.array(users), np.array(providers), strict=True)


def example1_matchings():
    """(M1, M2): the provider-optimal and user-optimal stable matchings"""
    return Matching((1, 0, 2), 3), Matching((2, 0, 1), 3)


PRESETS = {
    'example1': example1_preferences,
}


def _row_gap(row):
    return np.inf if row.size < 2 else float(np.min(np.diff(np.sort(row))))


def random_preferences(shape, seed, margin=0.0, low=0.0, high=1.0, rho_margin=None,
                       pairwise_unique=False, max_attempts=200_000):
    """
    Random strict preferences by rejection sampling

    Every row has consecutive sorted entries at least `margin` apart. With
    `rho_margin` every row of rho must also be that well separated; with
    `pairwise_unique` no two pairs share a balanced weight.

    Args:
        shape (MarketShape): Market dimensions
        seed (int): Generator seed
        margin (float): Minimum gap within each row
        low (float): Lower end of the uniform draw
        high (float): Upper end of the uniform draw
        rho_margin (float): Minimum gap within each rho row, or None
        pairwise_unique (bool): Require distinct balanced weights

    Returns:
        PreferenceTable: strict
    """
    if high <= low:
        raise ScenarioError('preferences.high', f"must exceed low ({low})")
    rng = np.random.default_rng(seed)

    def _row(size):
        for _ in range(max_attempts):
            row = rng.uniform(low, high, size)
            gap = _row_gap(row)
            if gap > 0 and gap >= margin:
                return row
        raise ScenarioError('preferences.margin', f"no row of {size} values found with gap {margin}")

    for attempt in range(max_attempts):
        users = np.array([_row(shape.n_providers) for _ in range(shape.n_users)])
        providers = np.array([_row(shape.n_users) for _ in range(shape.n_providers)])
        weights = users + providers.T
        if pairwise_unique and np.unique(weights).size != weights.size:
            continue
        if rho_margin is not None:
            rho = 0.5 * weights
            rows = list(rho) + list(rho.T)
            if min(_row_gap(row) for row in rows) < rho_margin:
                continue
        logger.debug(f"Random preferences (seed {seed}) accepted after {attempt + 1} attempts")
        return PreferenceTable(users, providers, strict=True)
    raise ScenarioError('preferences.rho_margin', f"no instance found within {max_attempts} attempts")


@dataclass(frozen=True)
class OutputSpec:
    directory: str
    trace_csv: str = 'trace_{seed}.csv'
    summary_json: str = 'summary.json'

    def trace_path(self, seed):
        return os.path.join(self.directory, self.trace_csv.format(seed=seed))

    def summary_path(self):
        return os.path.join(self.directory, self.summary_json)


@dataclass(frozen=True)
class ScenarioFile:
    """A validated scenario plus batch and output settings"""
    scenario: Scenario
    seeds: tuple
    checkpoints: tuple
    output: OutputSpec
    preferences_source: dict
    path: str = None

    @property
    def name(self):
        return self.scenario.name


def _field(data, key, prefix='', required=True, default=None):
    if key not in data:
        if required:
            raise ScenarioError(f"{prefix}{key}", "is required")
        return default
    return data[key]


def _number(value, name, minimum=None, strict_minimum=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(name, f"must be a number, got {value!r}")
    if minimum is not None and (value < minimum or (strict_minimum and value == minimum)):
        relation = '>' if strict_minimum else '>='
        raise ScenarioError(name, f"must be {relation} {minimum}, got {value}")
    return float(value)


def _integer(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(name, f"must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ScenarioError(name, f"must be >= {minimum}, got {value}")
    return value


def _choice(value, enum_type, name):
    try:
        return enum_type(value)
    except ValueError:
        options = ', '.join(member.value for member in enum_type)
        raise ScenarioError(name, f"must be one of {options}, got {value!r}")


def _matrix(value, rows, cols, name):
    try:
        matrix = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(name, "must be a matrix of numbers")
    if matrix.shape != (rows, cols):
        raise ScenarioError(name, f"must be {rows} x {cols}, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ScenarioError(name, "entries must be finite")
    return matrix


def _preferences(data, shape):
    kind = _field(data, 'kind', 'preferences.')
    if kind == 'explicit':
        users = _matrix(_field(data, 'user_prefs', 'preferences.'), shape.n_users, shape.n_providers,
                        'preferences.user_prefs')
        providers = _matrix(_field(data, 'provider_prefs', 'preferences.'), shape.n_providers, shape.n_users,
                            'preferences.provider_prefs')
        table = PreferenceTable(users, providers)
    elif kind == 'random':
        table = random_preferences(
            shape,
            seed=_integer(_field(data, 'seed', 'preferences.'), 'preferences.seed'),
            margin=_number(data.get('margin', 0.0), 'preferences.margin', 0.0),
            low=_number(data.get('low', 0.0), 'preferences.low'),
            high=_number(data.get('high', 1.0), 'preferences.high'),
            rho_margin=(None if data.get('rho_margin') is None
                        else _number(data['rho_margin'], 'preferences.rho_margin', 0.0)),
            pairwise_unique=bool(data.get('pairwise_unique', False)),
        )
    elif kind == 'preset':
        name = _field(data, 'name', 'preferences.')
        if name not in PRESETS:
            raise ScenarioError('preferences.name', f"unknown preset {name!r}")
        table = PRESETS[name]()
        if table.shape != shape:
            raise ScenarioError('preferences.name',
                                f"preset {name} is {table.shape.n_users} x {table.shape.n_providers}")
    else:
        raise ScenarioError('preferences.kind', f"must be explicit, random or preset, got {kind!r}")
    tied = table.tied_rows()
    if tied:
        raise ScenarioError('preferences', f"ties in rows of {', '.join(a.label for a in tied)}")
    return table.with_strict()


def _rule(data, shape, prefs):
    kind = _field(data, 'kind', 'rule.')
    if kind == 'zero':
        return RuleRegime.zero(), None
    if kind == 'balanced':
        return RuleRegime.balanced(), None
    if kind == 'proportional':
        gamma = _number(_field(data, 'gamma', 'rule.'), 'rule.gamma', 0.0)
        if gamma > 1:
            raise ScenarioError('rule.gamma', f"must be in [0, 1], got {gamma}")
        return RuleRegime.proportional(gamma), None
    if kind != 'pricing':
        raise ScenarioError('rule.kind', f"must be zero, proportional, balanced or pricing, got {kind!r}")

    bound = data.get('bound')
    bound = preference_bound(prefs) if bound is None else _number(bound, 'rule.bound', 0.0, strict_minimum=True)
    worst = float(np.max(np.abs(prefs.user_prefs)))
    if worst > bound:
        raise ScenarioError('rule.bound', f"|mu(u, .)| reaches {worst}, above the bound {bound}")
    if 'g' in data:
        g = data['g']
        if not isinstance(g, list) or len(g) != shape.n_providers:
            raise ScenarioError('rule.g', f"must list {shape.n_providers} prices")
        prices = [_number(price, 'rule.g') for price in g]
        c1 = _number(data.get('c1', 0.0), 'rule.c1')
        c2 = _number(data.get('c2', 0.0), 'rule.c2')
        return RuleRegime.pricing(c1, c2, prices), bound
    ordering = data.get('ordering')
    if ordering is not None and sorted(ordering) != list(range(shape.n_providers)):
        raise ScenarioError('rule.ordering', f"must be a permutation of 0..{shape.n_providers - 1}")
    return RuleRegime.from_params(pricing_defaults(bound, shape.n_providers, ordering)), bound


def parse_scenario(data, name='scenario', path=None):
    """
    Validate a decoded scenario document

    Args:
        data (dict): Decoded JSON
        name (str): Scenario name when the document carries none
        path (str): Source path, kept for messages

    Returns:
        ScenarioFile
    """
    if not isinstance(data, dict):
        raise ScenarioError('scenario', "top level must be an object")
    n_users = _integer(_field(data, 'n_users'), 'n_users', 1)
    n_providers = _integer(_field(data, 'n_providers'), 'n_providers', 1)
    if n_users < n_providers:
        raise ScenarioError('n_users', f"must be at least n_providers ({n_providers})")
    shape = MarketShape(n_users, n_providers)

    preferences = _field(data, 'preferences')
    if not isinstance(preferences, dict):
        raise ScenarioError('preferences', "must be an object")
    prefs = _preferences(preferences, shape)
    rule_data = _field(data, 'rule')
    if not isinstance(rule_data, dict):
        raise ScenarioError('rule', "must be an object")
    rule, bound = _rule(rule_data, shape, prefs)

    seed = _integer(data.get('seed', 0), 'seed')
    seeds = data.get('seeds', [seed])
    if not isinstance(seeds, list) or not seeds:
        raise ScenarioError('seeds', "must be a non-empty list of integers")
    seeds = tuple(_integer(s, 'seeds') for s in seeds)
    horizon = _integer(data.get('horizon', 1000), 'horizon', 0)
    checkpoints = data.get('checkpoints')
    if checkpoints is not None:
        if not isinstance(checkpoints, list):
            raise ScenarioError('checkpoints', "must be a list of integers")
        checkpoints = tuple(_integer(h, 'checkpoints', 1) for h in checkpoints)
        if any(h > horizon for h in checkpoints):
            raise ScenarioError('checkpoints', f"must not exceed horizon {horizon}")

    pinned = data.get('pinned_user')
    if pinned is not None:
        pinned = _integer(pinned, 'pinned_user', 0)
        if pinned >= n_users:
            raise ScenarioError('pinned_user', f"must be below n_users ({n_users})")

    matcher = _choice(data.get('matcher', 'gs'), Matcher, 'matcher')
    try:
        scenario = Scenario(
            shape=shape,
            true_prefs=prefs,
            rule=rule,
            sigma2=_number(data.get('sigma2', 1.0), 'sigma2', 0.0),
            alpha=_number(data.get('alpha', 3.0), 'alpha', 2.0, strict_minimum=True),
            warm_start=_integer(data.get('warm_start', 1), 'warm_start', 1),
            horizon=horizon,
            proposer_side=_choice(data.get('proposer_side', 'provider'), Side, 'proposer_side'),
            matcher=matcher,
            reward_dist=_choice(data.get('reward_dist', 'gaussian'), RewardDistribution, 'reward_dist'),
            seed=seed,
            pinned_user=pinned,
            pricing_bound=bound,
            name=str(data.get('name', name)),
        )
    except ScenarioError:
        raise
    except MatchMarketError as e:
        raise ScenarioError('matcher' if 'matcher' in str(e) else 'scenario', str(e))

    output = data.get('output', {})
    if not isinstance(output, dict):
        raise ScenarioError('output', "must be an object")
    spec = OutputSpec(
        directory=str(output.get('dir', get_config().OUTPUT_DIR)),
        trace_csv=str(output.get('trace_csv', OutputSpec.trace_csv)),
        summary_json=str(output.get('summary_json', OutputSpec.summary_json)),
    )
    return ScenarioFile(scenario=scenario, seeds=seeds, checkpoints=checkpoints, output=spec,
                        preferences_source=dict(preferences), path=path)


def load_scenario(path):
    """Read and validate a JSON scenario file"""
    try:
        with open(path, encoding='utf-8') as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ScenarioError('file', f"{path} not found")
    except json.JSONDecodeError as e:
        raise ScenarioError('file', f"{path} is not valid JSON ({e.msg} at line {e.lineno})")
    name = os.path.splitext(os.path.basename(path))[0]
    scenario_file = parse_scenario(data, name=name, path=path)
    logger.info(f"Loaded scenario {scenario_file.name} from {path}")
    return scenario_file
