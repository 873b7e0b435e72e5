import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcontrol import evolution as evo
from gcontrol.exceptions import ContractViolation
from gcontrol.fuzzy import FuzzyRule, RuleBase, firing_strength, rule_volume

import oracles


def _scalar_base(inv_values, mags=None):
    mags = mags or [1.0] * len(inv_values)
    return RuleBase(1, rules=[FuzzyRule([0.0], [[s]], 1, [m, 0.0])
                              for s, m in zip(inv_values, mags)])


def test_config_derives_pruning_threshold():
    cfg = evo.EvolutionConfig(delta=0.02)
    assert cfg.k_e == pytest.approx(0.002)
    with pytest.raises(ContractViolation):
        evo.EvolutionConfig(k_win=1.0)
    with pytest.raises(ContractViolation):
        evo.EvolutionConfig(rho_b=0.5)


# -- datum significance ---------------------------------------------------

def test_ds_two_equal_volumes():
    rb = RuleBase(2, rules=[FuzzyRule([0, 0], np.eye(2))])
    assert evo.datum_significance(rb, np.eye(2)) == pytest.approx(0.5)


def test_ds_four_equal_volumes():
    rb = RuleBase(2, rules=[FuzzyRule([i, 0], 3 * np.eye(2)) for i in range(3)])
    assert evo.datum_significance(rb, 3 * np.eye(2)) == pytest.approx(0.25)


def test_ds_hand_evaluation():
    # volumes 1 and 2, candidate volume 4, k = 1
    rb = _scalar_base([1.0, 0.5])
    assert evo.datum_significance(rb, [[0.25]]) == pytest.approx(4 / 7, abs=1e-14)


def test_error_weighted_ds():
    rb = RuleBase(2, rules=[FuzzyRule([0, 0], np.eye(2))])
    assert evo.error_weighted_significance(rb, np.eye(2), 0.0) == 0.0
    assert evo.error_weighted_significance(rb, np.eye(2), 2.0) == pytest.approx(1.0)
    rb1 = _scalar_base([1.0, 0.5])
    assert evo.error_weighted_significance(rb1, [[0.25]], 0.5) == pytest.approx(2 / 7, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 6), st.integers(1, 3))
def test_ds_strictly_inside_unit_interval(seed, j, k):
    rng = np.random.default_rng(seed)
    rb = RuleBase(k, rules=[FuzzyRule(np.zeros(k), oracles.random_spd(rng, k)) for _ in range(j)])
    ds = evo.datum_significance(rb, oracles.random_spd(rng, k))
    assert 0.0 < ds < 1.0


# -- error statistics and growth gate ---------------------------------------

def test_first_sample_mean():
    gs = evo.update_error_stats(evo.GrowthState(), 3.0)
    assert (gs.err_mean, gs.sample_count) == (3.0, 1)


def test_constant_stream_has_no_variance():
    gs = evo.GrowthState()
    for _ in range(200):
        gs = evo.update_error_stats(gs, 0.7)
    assert gs.err_mean == pytest.approx(0.7, abs=1e-12)
    assert gs.err_var == pytest.approx(0.0, abs=1e-15)


def test_stream_matches_batch_statistics():
    gs = evo.GrowthState()
    for x in (1.0, 2.0, 3.0):
        gs = evo.update_error_stats(gs, x)
    assert gs.err_mean == pytest.approx(2.0, abs=1e-12)
    assert gs.err_var == pytest.approx(oracles.batch_stats([1.0, 2.0, 3.0])[1], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=50))
def test_running_stats_property(xs):
    gs = evo.GrowthState()
    for i, x in enumerate(xs):
        gs = evo.update_error_stats(gs, x)
        assert gs.sample_count == i + 1
        assert gs.err_var >= 0.0
    mean, var = oracles.batch_stats(xs)
    assert gs.err_mean == pytest.approx(mean, abs=1e-9)
    assert gs.err_var == pytest.approx(var, abs=1e-7)


def test_should_grow_examples():
    gs = evo.GrowthState(ds_threshold=0.3)
    assert evo.should_grow(gs, 0.3, 0.0, True)
    assert not evo.should_grow(gs, 0.9, 0.0, False)
    assert evo.should_grow(gs, 0.0, 0.35, False)


# -- rule significance and pruning -------------------------------------------

def test_rule_significance_examples():
    assert evo.rule_significance(_scalar_base([2.0]), 0, 1.5) == pytest.approx(1.5)
    rb4 = _scalar_base([1.0] * 4)
    assert evo.rule_significance(rb4, 2, 8.0) == pytest.approx(2.0)
    rb2 = _scalar_base([1.0, 1 / 3], mags=[2.0, 2.0])
    assert evo.rule_significance(rb2, 0) == pytest.approx(0.5)
    with pytest.raises(IndexError):
        evo.rule_significance(rb2, 2)


def test_prune_nothing_when_all_significant():
    rb = _scalar_base([1.0] * 3)
    assert evo.prune_rules(rb, evo.EvolutionConfig()) == []
    assert len(rb) == 3


def test_prune_injected_tiny_rule():
    rb = RuleBase(2, rules=[FuzzyRule([i, 0], np.eye(2), 1, [1, 1, 1]) for i in range(3)])
    rb.append(FuzzyRule([0, 1], 1e6 * np.eye(2), 1, [1, 1, 1]))    # volume 1e-12
    scores = [evo.rule_significance(rb, i) for i in range(4)]
    assert scores[3] <= evo.EvolutionConfig().k_e < min(scores[:3])
    assert evo.prune_rules(rb, evo.EvolutionConfig()) == [3]
    assert len(rb) == 3


def test_last_rule_is_never_pruned():
    rb = _scalar_base([1.0], mags=[0.0])
    assert evo.prune_rules(rb, evo.EvolutionConfig()) == []
    rb2 = _scalar_base([1.0, 2.0], mags=[0.0, 0.0])
    assert len(evo.prune_rules(rb2, evo.EvolutionConfig())) == 1
    assert len(rb2) == 1


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 6))
def test_pruning_preserves_survivor_order(seed, j):
    rng = np.random.default_rng(seed)
    rb = RuleBase(2, rules=[FuzzyRule(rng.uniform(-1, 1, 2), oracles.random_spd(rng, 2, 0.5, 50),
                                      1, rng.standard_normal(3) * rng.choice([1e-6, 1.0]))
                            for _ in range(j)])
    before = evo.significance_scores(rb)
    pruned = evo.prune_rules(rb, evo.EvolutionConfig(delta=0.01))
    kept = [i for i in range(j) if i not in pruned]
    after = evo.significance_scores(rb)
    assert list(np.argsort(before[kept], kind="stable")) == list(np.argsort(after, kind="stable"))


# -- winner selection ----------------------------------------------------------

def test_identical_rules_tie_to_lowest_index():
    rb = RuleBase(2, rules=[FuzzyRule([0, 0], np.eye(2)), FuzzyRule([0, 0], np.eye(2))])
    assert evo.select_winner(rb, [0.3, 0.1]) == (0, pytest.approx(0.5))


def test_prior_decides_between_equidistant_rules():
    rb = RuleBase(1, rules=[FuzzyRule([-1.0], [[1.0]], 3), FuzzyRule([1.0], [[1.0]], 1)])
    i, p = evo.select_winner(rb, [0.0])
    assert i == 0 and p == pytest.approx(0.75, abs=1e-12)


def test_winner_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(50):
        rb = RuleBase(2, rules=[FuzzyRule(rng.uniform(-1, 1, 2), oracles.random_spd(rng, 2),
                                          int(rng.integers(1, 20))) for _ in range(5)])
        z = rng.uniform(-1, 1, 2)
        post = oracles.posteriors(rb.centers(), rb.inv_dispersions(), rb.supports(), z)
        i, p = evo.select_winner(rb, z)
        assert i == int(np.argmax(post))
        assert p == pytest.approx(max(post), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_posteriors_normalized(seed, j):
    rng = np.random.default_rng(seed)
    rb = RuleBase(2, rules=[FuzzyRule(rng.uniform(-1, 1, 2), oracles.random_spd(rng, 2),
                                      int(rng.integers(1, 9))) for _ in range(j)])
    lp = evo.log_posteriors(rb, rng.uniform(-1, 1, 2))
    assert abs(np.exp(lp).sum() - 1.0) <= 1e-12


# -- vigilance -----------------------------------------------------------------

@settings(max_examples=500, deadline=None)
@given(st.floats(0, 1), st.floats(0, 10), st.floats(0.01, 0.99), st.floats(0, 10))
def test_case_partition(r_win, v_win, rho_a, v_max):
    hits = [r_win >= rho_a and v_win <= v_max, r_win < rho_a and v_win > v_max,
            r_win >= rho_a and v_win > v_max, r_win < rho_a and v_win <= v_max]
    assert sum(hits) == 1
    assert evo.classify_case(r_win, v_win, rho_a, v_max) == hits.index(True) + 1


def test_case_one_moves_center_to_mean():
    rb = RuleBase(1, rules=[FuzzyRule([0.0], [[0.001]], 1)])
    cfg = evo.EvolutionConfig(rho_a=0.5, rho_b=0.1, vmax_mode="domain")
    out = evo.vigilance_update(rb, cfg, [2.0], 0, domain_volume=1e6)
    assert out.case == evo.CASE_UPDATE
    assert rb[0].center[0] == pytest.approx(1.0)
    assert rb[0].support == 2


def test_rank_one_update_matches_direct_inverse():
    rng = np.random.default_rng(13)
    s = oracles.random_spd(rng, 2)
    c = rng.uniform(-1, 1, 2)
    z = rng.uniform(-1, 1, 2)
    center, inv = evo.rank_one_inverse_update(s, c, z, 4)
    c_ref, inv_ref = oracles.covariance_update(s, c, z, 4)
    np.testing.assert_allclose(center, c_ref, rtol=1e-12)
    np.testing.assert_allclose(inv, inv_ref, rtol=1e-8, atol=1e-12)


def test_case_three_shrinks_until_under_cap():
    c = 2.0
    rb = RuleBase(2, rules=[FuzzyRule([0, 0], c * np.eye(2), 5)])
    cfg = evo.EvolutionConfig(rho_a=0.5, rho_b=0.01)
    out = evo.vigilance_update(rb, cfg, [0.1, 0.0], 0)
    assert out.case == evo.CASE_SHRINK
    n = out.shrink_steps
    # each pass scales the volume by 1 / 1.1^k; stop at the first pass under the cap
    v0 = 1 / c ** 2
    assert v0 / 1.1 ** (2 * n) <= 0.01 < v0 / 1.1 ** (2 * (n - 1))
    np.testing.assert_allclose(rb[0].inv_dispersion, c * 1.1 ** n * np.eye(2))
    np.testing.assert_array_equal(rb[0].center, [0.1, 0.0])
    assert rule_volume(rb[0]) <= 0.01


def test_case_two_creates_rule_at_sample():
    rb = RuleBase(2, rules=[FuzzyRule([0, 0], np.eye(2), 1, [1, 2, 3])])
    cfg = evo.EvolutionConfig()
    out = evo.vigilance_update(rb, cfg, [0.9, -0.9], 0)
    assert out.case == evo.CASE_CREATE and out.created == 1
    np.testing.assert_array_equal(rb[1].center, [0.9, -0.9])
    np.testing.assert_array_equal(rb[1].inv_dispersion, cfg.k_fs * np.eye(2))
    np.testing.assert_array_equal(rb[1].consequent, [1, 2, 3])
    assert rb[1].support == 1


def test_case_two_declined_growth_absorbs():
    rb = RuleBase(2, rules=[FuzzyRule([0, 0], np.eye(2), 1)])
    gs = evo.GrowthState(ds_threshold=0.99)
    out = evo.vigilance_update(rb, evo.EvolutionConfig(), [0.9, -0.9], 0, gs=gs,
                               e_rn=0.1, trend_positive=False)
    assert out.case == evo.CASE_CREATE and not out.grew
    assert len(rb) == 1 and rb[0].support == 2


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_absorbing_cases_conserve_support(seed):
    rng = np.random.default_rng(seed)
    rb = RuleBase(2, rules=[FuzzyRule(rng.uniform(-1, 1, 2), oracles.random_spd(rng, 2, 1, 400),
                                      int(rng.integers(1, 9))) for _ in range(3)])
    z = rng.uniform(-1, 1, 2)
    winner, _ = evo.select_winner(rb, z)
    total = rb.supports().sum()
    out = evo.vigilance_update(rb, evo.EvolutionConfig(rho_a=0.5), z, winner)
    if out.case in (evo.CASE_UPDATE, evo.CASE_ATTRACT):
        assert rb.supports().sum() == total + 1
    elif out.grew:
        assert rb.supports().sum() == total + 1 and rb[out.created].support == 1
    for r in rb:
        assert np.allclose(r.inv_dispersion, r.inv_dispersion.T, atol=1e-10)
        assert np.linalg.eigvalsh(r.inv_dispersion).min() > 0


def test_sum_mode_caps_by_total_volume():
    rb = RuleBase(1, rules=[FuzzyRule([0.0], [[1.0]]), FuzzyRule([1.0], [[0.5]])])
    cfg = evo.EvolutionConfig(vmax_mode="sum", rho_b=0.1)
    assert math.exp(evo.log_volume_cap(rb, cfg)) == pytest.approx(0.1 * 3.0)
    assert math.exp(evo.log_volume_cap(rb, evo.EvolutionConfig(rho_b=0.1))) == pytest.approx(0.1)


# -- bootstrap -------------------------------------------------------------------

def test_bootstrap_examples():
    cfg = evo.EvolutionConfig(k_fs=1.0)
    r = evo.bootstrap_first_rule([0, 0], cfg)
    np.testing.assert_array_equal(r.inv_dispersion, np.eye(2))
    np.testing.assert_array_equal(r.center, [0, 0])
    r4 = evo.bootstrap_first_rule([1, -1], evo.EvolutionConfig(k_fs=4.0))
    np.testing.assert_array_equal(r4.inv_dispersion, np.diag([4.0, 4.0]))
    assert rule_volume(r4) == pytest.approx(1 / 16)
    assert firing_strength(r4, [1, -1]) == 1.0
    np.testing.assert_array_equal(r4.consequent, np.zeros(3))


def test_bootstrap_refuses_nonempty_base():
    rb = RuleBase(2)
    evo.bootstrap_first_rule([0, 0], evo.EvolutionConfig(), rb=rb)
    with pytest.raises(ContractViolation):
        evo.bootstrap_first_rule([0, 0], evo.EvolutionConfig(), rb=rb)
