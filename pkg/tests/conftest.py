"""
Shared fixtures for the matchmarket test suite
"""

import json
import os

os.environ['MATCHMARKET_ENV'] = 'testing'

import numpy as np
import pytest

from matchmarket.core import MarketShape, PreferenceTable
from matchmarket.market import Scenario, StepRecord, Trace
from matchmarket.rules import RuleRegime
from matchmarket.scenario import example1_matchings, example1_preferences

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')


def random_table(rng, n_users, n_providers):
    """Strict preferences drawn uniformly from [0, 1)"""
    return PreferenceTable(rng.uniform(0, 1, (n_users, n_providers)),
                           rng.uniform(0, 1, (n_providers, n_users)), strict=True)


def random_shape(rng, max_users=5, max_providers=4):
    n_providers = int(rng.integers(1, max_providers + 1))
    n_users = int(rng.integers(n_providers, max_users + 1))
    return MarketShape(n_users, n_providers)


def make_trace(scenario, matchings):
    """A trace holding only the given matchings, for regret bookkeeping tests"""
    n_agents = scenario.shape.n_agents
    zeros = tuple([0.0] * n_agents)
    records = tuple(
        StepRecord(t=t, transient_digest='', matching=m, rewards=(), costs=zeros, transfers=zeros,
                   payoffs=zeros, net_transfer=0.0, stable=True, blocking=None, welfare=0.0, welfare_max=0.0)
        for t, m in enumerate(matchings, start=1)
    )
    return Trace(scenario=scenario, records=records, learners=None)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def example1():
    return example1_preferences()


@pytest.fixture
def example1_pair():
    return example1_matchings()


@pytest.fixture
def example1_scenario(example1):
    return Scenario(shape=MarketShape(3, 3), true_prefs=example1, rule=RuleRegime.zero(),
                    sigma2=0.01, alpha=3.0, horizon=200, seed=0, name='example1')


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario document to a temporary JSON file and return its path"""
    def _write(data, name='scenario.json'):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding='utf-8')
        return str(path)
    return _write


@pytest.fixture
def small_scenario_data(tmp_path):
    return {
        'name': 'small',
        'n_users': 2,
        'n_providers': 2,
        'preferences': {
            'kind': 'explicit',
            'user_prefs': [[0.9, 0.2], [0.4, 0.7]],
            'provider_prefs': [[0.8, 0.3], [0.1, 0.6]],
        },
        'rule': {'kind': 'zero'},
        'sigma2': 0.25,
        'alpha': 3,
        'horizon': 50,
        'seeds': [0],
        'output': {'dir': str(tmp_path / 'out')},
    }
