import math

import numpy as np
import pytest

from conftest import make_trace
from matchmarket.core import MarketShape, Matching, PreferenceTable
from matchmarket.errors import (
    AmbiguousPreferencesError,
    InsufficientDataError,
    ParameterError,
    RuleMismatchError,
)
from matchmarket.metrics import (
    BoundKind,
    GapStats,
    Growth,
    RegretBasis,
    compute_gaps,
    default_checkpoints,
    example1_split,
    extremal_matchings,
    growth_classifier,
    regret_curves,
    single_learner_pulls,
    theoretical_bound,
    ucb_concentration,
    welfare_ratio,
    welfare_ratio_series,
)
from matchmarket.market import Scenario, run
from matchmarket.rules import RuleRegime, payoff_table, pricing_defaults
from matchmarket.stable import unique_stable

CHECKPOINTS = [125, 250, 500, 1000, 2000, 4000, 8000, 16000]


def mutual_top_instance():
    return PreferenceTable([[0.9, 0.1], [0.2, 0.8]], [[0.9, 0.1], [0.3, 0.7]], strict=True)


def unit_gaps():
    return GapStats(delta_min=0.5, delta_max=np.array([1.0, 1.0]), delta_rho_min=0.5,
                    delta_rho_max_star=np.array([1.0, 1.0]), delta_B_max_star=np.array([1.0, 1.0]))


def test_compute_gaps_on_small_market():
    gaps = compute_gaps(mutual_top_instance())
    assert gaps.delta_min == pytest.approx(0.4)
    np.testing.assert_allclose(gaps.delta_max, [0.9, 0.8, 0.9, 0.7])
    assert gaps.delta_rho_min == pytest.approx(0.55)
    np.testing.assert_allclose(gaps.delta_rho_max_star, [0.9, 0.75, 0.9, 0.75])
    assert gaps.bound == 0.9
    assert gaps.balanced_matching == Matching((0, 1), 2)
    assert gaps.pricing_matching == Matching((0, 1), 2)
    np.testing.assert_allclose(gaps.delta_B_max_star, [2.7, 2.6, 0.9, 0.7])


def test_compute_gaps_single_pair_has_no_row_gap():
    gaps = compute_gaps(PreferenceTable([[0.4]], [[0.6]]))
    assert gaps.delta_min == math.inf
    np.testing.assert_allclose(gaps.delta_max, [0.4, 0.6])


def test_compute_gaps_without_pairwise_unique_rho():
    prefs = PreferenceTable([[0.5, 0.25], [0.25, 0.75]], [[0.25, 0.5], [0.5, 0.125]], strict=True)
    gaps = compute_gaps(prefs)
    assert gaps.delta_rho_min is None
    assert gaps.balanced_matching is None
    with pytest.raises(AmbiguousPreferencesError):
        theoretical_bound(BoundKind.THM1, gaps, prefs.shape, 1.0, 3.0, 100)
    assert gaps.to_dict(prefs.shape.agent_labels())['delta_rho_max_star'] is None


def test_compute_gaps_follows_the_pricing_ordering(example1):
    rule = RuleRegime.from_params(pricing_defaults(1.0, 3, [2, 1, 0]))
    gaps = compute_gaps(example1, bound=1.0, rule=rule)
    assert gaps.pricing_matching == unique_stable(payoff_table(rule, example1))
    assert gaps.pricing_matching == Matching((0, 1, 2), 3)
    assert compute_gaps(example1, bound=1.0).pricing_matching == Matching((1, 0, 2), 3)
    assert compute_gaps(example1, bound=1.0, rule=RuleRegime.zero()).pricing_matching == Matching((1, 0, 2), 3)


def test_compute_gaps_with_pricing_ties():
    prefs = PreferenceTable([[1.0, -1.0], [0.3, 0.6]], [[0.8, 0.3], [0.1, 0.6]])
    gaps = compute_gaps(prefs)
    assert gaps.pricing_matching is None
    assert gaps.delta_B_max_star is None
    assert gaps.delta_min == pytest.approx(0.3)
    with pytest.raises(AmbiguousPreferencesError):
        theoretical_bound(BoundKind.THM2, gaps, prefs.shape, 1.0, 3.0, 100)
    assert np.all(theoretical_bound(BoundKind.PROP1_PESSIMAL, gaps, prefs.shape, 1.0, 3.0, 100) > 0)


def test_compute_gaps_rejects_small_bound():
    with pytest.raises(ParameterError):
        compute_gaps(mutual_top_instance(), bound=0.5)


def test_theoretical_bounds_closed_form():
    shape = MarketShape(1, 1)
    gaps = unit_gaps()
    assert theoretical_bound(BoundKind.PROP1_PESSIMAL, gaps, shape, 1.0, 4.0, math.e)[0] == pytest.approx(260.0)
    assert theoretical_bound(BoundKind.THM2, gaps, shape, 1.0, 4.0, math.e)[0] == pytest.approx(260.0)
    assert theoretical_bound(BoundKind.THM1, gaps, shape, 1.0, 4.0, math.e)[0] == pytest.approx(130.0)
    prop2 = theoretical_bound(BoundKind.PROP2_PESSIMAL, gaps, shape, 1.0, 4.0, math.e, gamma=0.5)
    assert prop2[0] == pytest.approx(514.0)


def test_bounds_scale_with_market_size():
    gaps = unit_gaps()
    small = theoretical_bound(BoundKind.THM1, gaps, MarketShape(1, 1), 1.0, 3.0, 1000)
    large = theoretical_bound(BoundKind.THM1, gaps, MarketShape(2, 1), 1.0, 3.0, 1000)
    assert large[0] == pytest.approx(4 * small[0])


def test_theoretical_bound_validation():
    shape = MarketShape(1, 1)
    gaps = unit_gaps()
    with pytest.raises(ParameterError):
        theoretical_bound(BoundKind.THM2, gaps, shape, 1.0, 2.0, 100)
    with pytest.raises(ParameterError):
        theoretical_bound(BoundKind.THM2, gaps, shape, 1.0, 3.0, 0)
    with pytest.raises(ParameterError):
        theoretical_bound(BoundKind.PROP2_PESSIMAL, gaps, shape, 1.0, 3.0, 100, gamma=1.0)
    tied = GapStats(delta_min=0.0, delta_max=np.array([1.0, 1.0]))
    with pytest.raises(AmbiguousPreferencesError):
        theoretical_bound(BoundKind.PROP1_PESSIMAL, tied, shape, 1.0, 3.0, 100)


def test_extremal_matchings_on_example1(example1, example1_pair):
    m1, m2 = example1_pair
    extremal = extremal_matchings(example1, RuleRegime.zero())
    assert len(extremal.stable_set) == 2
    assert extremal.optimal[3] == m1
    assert extremal.pessimal[3] == m2
    assert extremal.optimal[1] == m2
    assert extremal.pessimal[1] == m1


def test_regret_curves_by_hand(example1, example1_scenario, example1_pair):
    m1, m2 = example1_pair
    trace = make_trace(example1_scenario, [m1, m2, m2, m1])
    extremal = extremal_matchings(example1, RuleRegime.zero())
    report = regret_curves([trace], extremal, RuleRegime.zero(), checkpoints=[1, 2, 3, 4])
    assert report.optimal.shape == (1, 4, 6)
    horizons, values = zip(*report.curve('p0'))
    assert horizons == (1, 2, 3, 4)
    assert values == pytest.approx((0.0, 0.1, 0.2, 0.2))
    assert report.curve('p0', 'pessimal')[-1][1] == pytest.approx(-0.2)
    assert report.final()['u1'] == pytest.approx(0.2)
    summary = report.to_dict()
    assert summary['basis'] == 'payoff'
    assert summary['optimal']['p0']['std'] == [0.0, 0.0, 0.0, 0.0]


def test_regret_curves_reject_mismatch(example1, example1_scenario, example1_pair):
    trace = make_trace(example1_scenario, list(example1_pair))
    extremal = extremal_matchings(example1, RuleRegime.zero())
    with pytest.raises(RuleMismatchError):
        regret_curves([trace], extremal, RuleRegime.proportional(0.5))
    with pytest.raises(ParameterError):
        regret_curves([trace], extremal, RuleRegime.zero(), checkpoints=[3])


def test_regret_under_proportional_cost_is_scaled(example1, example1_scenario, example1_pair):
    m1, m2 = example1_pair
    rule = RuleRegime.proportional(0.5)
    scenario = example1_scenario.with_rule(rule)
    trace = make_trace(scenario, [m2, m2, m1])
    payoff = regret_curves([trace], extremal_matchings(example1, rule), rule, [3])
    utility = regret_curves([trace], extremal_matchings(example1, rule, RegretBasis.UTILITY), rule, [3])
    np.testing.assert_allclose(payoff.optimal, 0.5 * utility.optimal, atol=1e-12)


def test_default_checkpoints():
    assert default_checkpoints(16000, 4) == [2000, 4000, 8000, 16000]
    assert default_checkpoints(8) == [1, 2, 4, 8]
    assert default_checkpoints(0) == []
    assert default_checkpoints(128) == [1, 2, 4, 8, 16, 32, 64, 128]


def test_welfare_ratio():
    assert welfare_ratio(5.0, 10.0) == 0.5
    assert welfare_ratio(-1.0, 10.0) == 0.0
    assert welfare_ratio(0.0, 0.0) == 1.0


def test_welfare_ratio_series_flags_zero_welfare(example1_scenario):
    trace = make_trace(example1_scenario, [Matching((1, 0, 2), 3)] * 3)
    series = welfare_ratio_series(trace)
    assert series.degenerate_steps == [1, 2, 3]
    assert series.min_ratio == 1.0


def test_growth_classifier_shapes():
    log_curve = [(h, 5 * math.log(h)) for h in CHECKPOINTS]
    linear_curve = [(h, 0.3 * h) for h in CHECKPOINTS]
    flat_curve = [(h, 2.0) for h in CHECKPOINTS]
    root_curve = [(h, math.sqrt(h)) for h in CHECKPOINTS]
    assert growth_classifier(log_curve).verdict is Growth.LOGARITHMIC
    assert growth_classifier(linear_curve).verdict is Growth.LINEAR
    assert growth_classifier(flat_curve).verdict is Growth.LOGARITHMIC
    assert growth_classifier(root_curve).verdict is Growth.INDETERMINATE


def test_growth_classifier_bounded_curves():
    wobble = [0.2, -0.3, 0.4, -0.1, 0.3, -0.2, 0.1, 0.2]
    curve = list(zip(CHECKPOINTS, wobble))
    assert growth_classifier(curve).verdict is Growth.INDETERMINATE
    fit = growth_classifier(curve, step_scale=0.3)
    assert fit.bounded
    assert fit.verdict is Growth.LOGARITHMIC

    below = growth_classifier([(h, -0.5 - 1e-4 * h) for h in CHECKPOINTS])
    assert below.bounded
    assert below.verdict is Growth.LOGARITHMIC

    linear = growth_classifier([(h, 0.3 * h) for h in CHECKPOINTS], step_scale=1.0)
    assert not linear.bounded
    assert linear.verdict is Growth.LINEAR


def test_growth_classifier_needs_four_points():
    with pytest.raises(InsufficientDataError):
        growth_classifier([(1, 0.0), (2, 1.0), (4, 2.0)])
    with pytest.raises(ParameterError):
        growth_classifier([(1, 0.0), (1, 1.0), (4, 2.0), (8, 3.0)])


def test_example1_split_identity(example1_scenario, example1_pair):
    m1, m2 = example1_pair
    identity = Matching((0, 1, 2), 3)
    trace = make_trace(example1_scenario, [m1, m2, m2, identity])
    (split,) = example1_split([trace], m1, m2)
    assert (split.first, split.second, split.other, split.off_stable) == (1, 2, 1, 1)
    assert split.identity_holds


def test_ucb_concentration_small_run():
    result = ucb_concentration(means=(0.9, 0.5), sigma2=0.1, horizon=200, seeds=range(3), threads=1)
    assert result.best == 0
    assert result.mean_pulls.sum() == pytest.approx(200)
    assert result.bounds[0] == math.inf
    assert result.within_bound == [True]


def test_single_learner_pulls_replay_the_market_run():
    prefs = PreferenceTable(np.zeros((3, 1)), np.array([[0.9, 0.6, 0.3]]))
    scenario = Scenario(shape=MarketShape(3, 1), true_prefs=prefs, rule=RuleRegime.zero(),
                        sigma2=0.5, horizon=150, name='arms')
    for seed in range(4):
        seeded = scenario.with_seed(seed)
        expected = run(seeded).learners.provider_counts[0] - seeded.warm_start
        np.testing.assert_array_equal(single_learner_pulls(seeded), expected)
    with pytest.raises(ParameterError):
        single_learner_pulls(scenario.with_rule(RuleRegime.proportional(0.5)))
