import glob
import os

import numpy as np
import pytest

from conftest import SCENARIO_DIR
from matchmarket.core import MarketShape
from matchmarket.errors import ScenarioError
from matchmarket.market import Matcher
from matchmarket.rules import RuleKind
from matchmarket.scenario import (
    example1_matchings,
    example1_preferences,
    load_scenario,
    parse_scenario,
    random_preferences,
)
from matchmarket.stable import greedy_balanced


def field_of(data):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(data)
    return info.value.field


@pytest.mark.parametrize('path', sorted(glob.glob(os.path.join(SCENARIO_DIR, '*.json'))))
def test_bundled_scenarios_load(path):
    scenario_file = load_scenario(path)
    assert scenario_file.seeds
    assert scenario_file.scenario.true_prefs.is_strict()


def test_example1_preferences():
    prefs = example1_preferences()
    assert prefs.shape == MarketShape(3, 3)
    assert list(np.argsort(-prefs.user_prefs[0])) == [2, 1, 0]
    assert list(np.argsort(-prefs.provider_prefs[2])) == [2, 1, 0]
    greedy_balanced(prefs)
    m1, m2 = example1_matchings()
    assert m1.label == '1-0-2'
    assert m2.label == '2-0-1'


def test_small_scenario_parses(small_scenario_data):
    scenario_file = parse_scenario(small_scenario_data)
    scenario = scenario_file.scenario
    assert scenario.name == 'small'
    assert scenario.horizon == 50
    assert scenario.matcher is Matcher.GS
    assert scenario_file.seeds == (0,)
    assert scenario_file.output.trace_path(3).endswith('trace_3.csv')


def test_defaults_fill_optional_fields(small_scenario_data):
    data = dict(small_scenario_data)
    for key in ('sigma2', 'alpha', 'horizon', 'seeds', 'output', 'name'):
        data.pop(key)
    scenario_file = parse_scenario(data, name='fallback')
    assert scenario_file.scenario.sigma2 == 1.0
    assert scenario_file.scenario.alpha == 3.0
    assert scenario_file.scenario.horizon == 1000
    assert scenario_file.seeds == (0,)
    assert scenario_file.output.directory == 'out_test'
    assert scenario_file.name == 'fallback'


def test_field_level_errors(small_scenario_data):
    def variant(**changes):
        data = dict(small_scenario_data)
        data.update(changes)
        return data

    missing = dict(small_scenario_data)
    missing.pop('n_users')
    assert field_of(missing) == 'n_users'
    assert field_of(variant(n_users=1)) == 'n_users'
    assert field_of(variant(rule={'kind': 'tax'})) == 'rule.kind'
    assert field_of(variant(rule={'kind': 'proportional', 'gamma': 1.5})) == 'rule.gamma'
    assert field_of(variant(rule={'kind': 'proportional'})) == 'rule.gamma'
    assert field_of(variant(alpha=2)) == 'alpha'
    assert field_of(variant(sigma2='high')) == 'sigma2'
    assert field_of(variant(horizon=-5)) == 'horizon'
    assert field_of(variant(checkpoints=[10, 60])) == 'checkpoints'
    assert field_of(variant(matcher='random')) == 'matcher'
    assert field_of(variant(matcher='greedy_balanced')) == 'matcher'
    assert field_of(variant(seeds=[])) == 'seeds'


def test_preference_errors(small_scenario_data):
    data = dict(small_scenario_data)
    data['preferences'] = {'kind': 'explicit', 'user_prefs': [[0.1, 0.2]], 'provider_prefs': [[0.1, 0.2]] * 2}
    assert field_of(data) == 'preferences.user_prefs'
    data['preferences'] = {'kind': 'explicit', 'user_prefs': [[0.5, 0.5], [0.1, 0.2]],
                           'provider_prefs': [[0.1, 0.2], [0.3, 0.4]]}
    assert field_of(data) == 'preferences'
    data['preferences'] = {'kind': 'preset', 'name': 'unknown'}
    assert field_of(data) == 'preferences.name'
    data['preferences'] = {'kind': 'preset', 'name': 'example1'}
    assert field_of(data) == 'preferences.name'
    data['preferences'] = {'kind': 'csv'}
    assert field_of(data) == 'preferences.kind'


def test_pricing_rule_defaults(small_scenario_data):
    data = dict(small_scenario_data, rule={'kind': 'pricing'})
    scenario = parse_scenario(data).scenario
    assert scenario.rule.kind is RuleKind.PRICING
    assert scenario.pricing_bound == 0.9
    assert scenario.rule.g == pytest.approx((1.8, 0.0))

    data['rule'] = {'kind': 'pricing', 'bound': 0.5}
    assert field_of(data) == 'rule.bound'
    data['rule'] = {'kind': 'pricing', 'g': [1.0]}
    assert field_of(data) == 'rule.g'
    data['rule'] = {'kind': 'pricing', 'ordering': [0, 0]}
    assert field_of(data) == 'rule.ordering'


def test_load_scenario_file_errors(tmp_path):
    with pytest.raises(ScenarioError) as info:
        load_scenario(str(tmp_path / 'missing.json'))
    assert info.value.field == 'file'
    broken = tmp_path / 'broken.json'
    broken.write_text('{"n_users": 2,', encoding='utf-8')
    with pytest.raises(ScenarioError) as info:
        load_scenario(str(broken))
    assert info.value.field == 'file'


def test_load_scenario_names_from_file(write_scenario, small_scenario_data):
    data = dict(small_scenario_data)
    data.pop('name')
    path = write_scenario(data, name='tiny_market.json')
    assert load_scenario(path).name == 'tiny_market'


def test_random_preferences_respect_margin():
    shape = MarketShape(4, 3)
    prefs = random_preferences(shape, seed=11, margin=0.05)
    for row in list(prefs.user_prefs) + list(prefs.provider_prefs):
        assert np.min(np.diff(np.sort(row))) >= 0.05
    again = random_preferences(shape, seed=11, margin=0.05)
    np.testing.assert_array_equal(prefs.user_prefs, again.user_prefs)


def test_random_preferences_pairwise_unique():
    prefs = random_preferences(MarketShape(3, 3), seed=2, pairwise_unique=True, rho_margin=0.01)
    weights = prefs.user_prefs + prefs.provider_prefs.T
    assert np.unique(weights).size == weights.size


def test_random_preferences_validation():
    with pytest.raises(ScenarioError):
        random_preferences(MarketShape(2, 2), seed=0, low=1.0, high=0.5)
    with pytest.raises(ScenarioError):
        random_preferences(MarketShape(3, 3), seed=0, margin=0.6, max_attempts=50)
