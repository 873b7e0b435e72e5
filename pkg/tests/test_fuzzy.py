import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcontrol.exceptions import ContractViolation, NoRulesError, NumericalError
from gcontrol.fuzzy import (FuzzyRule, RuleBase, firing_strength, infer, normalized_firing,
                            rule_volume)

import oracles


def _base(rng, j, k):
    rb = RuleBase(k)
    for _ in range(j):
        rb.append(FuzzyRule(rng.uniform(-1, 1, k), oracles.random_spd(rng, k),
                            int(rng.integers(1, 10)), rng.standard_normal(k + 1)))
    return rb


def test_firing_at_center_is_one():
    r = FuzzyRule([0.3, -0.2], np.eye(2))
    assert firing_strength(r, [0.3, -0.2]) == 1.0


def test_firing_unit_offset():
    r = FuzzyRule([0.0, 0.0], np.eye(2))
    assert firing_strength(r, [1.0, 0.0]) == pytest.approx(0.367879, abs=1e-6)


def test_firing_diagonal_inverse_dispersion():
    r = FuzzyRule([0.0, 0.0], np.diag([2.0, 0.5]))
    assert firing_strength(r, [1.0, 2.0]) == pytest.approx(math.exp(-4.0), rel=1e-14)


def test_firing_dimension_mismatch():
    r = FuzzyRule([0.0, 0.0], np.eye(2))
    with pytest.raises(ContractViolation):
        firing_strength(r, [1.0, 2.0, 3.0])


def test_single_rule_constant_consequent():
    rb = RuleBase(2, rules=[FuzzyRule([0, 0], np.eye(2), 1, [2.0, 0.0, 0.0])])
    for z in ([0, 0], [0.9, -0.4], [5.0, 5.0]):
        assert infer(rb, z).output == 2.0


def test_symmetric_rules_average():
    rb = RuleBase(1, rules=[FuzzyRule([-0.5], [[1.0]], 1, [1.0, 0.0]),
                            FuzzyRule([0.5], [[1.0]], 1, [3.0, 0.0])])
    out = infer(rb, [0.0])
    assert out.output == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(out.firing.normalized, [0.5, 0.5])


def test_three_rules_match_straight_line_evaluation():
    rng = np.random.default_rng(3)
    rb = _base(rng, 3, 2)
    z = np.array([0.1, -0.3])
    want = oracles.ts_output(rb.centers(), rb.inv_dispersions(), rb.consequents(), z)
    assert infer(rb, z).output == pytest.approx(want, abs=1e-12)


def test_regressor_layout():
    rng = np.random.default_rng(4)
    rb = _base(rng, 3, 2)
    z = np.array([0.2, 0.4])
    out = infer(rb, z)
    blocks = out.psi_regressor.reshape(3, 3)
    np.testing.assert_allclose(blocks[:, 0], out.firing.normalized)
    np.testing.assert_allclose(blocks[:, 1:], np.outer(out.firing.normalized, z))
    assert out.output == pytest.approx(out.psi_regressor @ rb.consequents().ravel(), abs=1e-12)


def test_empty_base_raises():
    with pytest.raises(NoRulesError, match="no rules"):
        infer(RuleBase(2), [0.0, 0.0])


def test_underflow_falls_back_to_nearest_rule():
    rb = RuleBase(1, rules=[FuzzyRule([0.0], [[1e6]]), FuzzyRule([1.0], [[1e6]])])
    fv = normalized_firing(rb, [0.9])
    assert fv.raw.sum() == 0.0
    np.testing.assert_array_equal(fv.normalized, [0.0, 1.0])


def test_volume_identity_and_diagonal():
    assert rule_volume(FuzzyRule(np.zeros(3), np.eye(3))) == pytest.approx(1.0)
    assert rule_volume(FuzzyRule(np.zeros(2), np.diag([4.0, 4.0]))) == pytest.approx(1 / 16)


def test_volume_matches_explicit_inverse():
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = oracles.random_spd(rng, 3)
        assert rule_volume(FuzzyRule(np.zeros(3), s)) == pytest.approx(oracles.volume(s), abs=1e-9)


def test_singular_volume_names_rule():
    with pytest.raises(NumericalError, match="rule 7"):
        rule_volume(FuzzyRule([0, 0], [[1.0, 1.0], [1.0, 1.0]]), 7)


def test_rule_base_validation():
    with pytest.raises(ContractViolation):
        RuleBase(2, input_range=[[1, 0], [-1, 1]])
    rb = RuleBase(2)
    with pytest.raises(ContractViolation):
        rb.append(FuzzyRule([0.0], [[1.0]]))


rule_bases = st.integers(0, 2 ** 31 - 1).map(np.random.default_rng).flatmap(
    lambda rng: st.tuples(st.integers(1, 5), st.integers(1, 3)).map(
        lambda jk: (_base(rng, *jk), rng.uniform(-1, 1, jk[1]))))


@settings(max_examples=100, deadline=None)
@given(rule_bases)
def test_normalization_and_bounds(case):
    rb, z = case
    fv = normalized_firing(rb, z)
    assert abs(fv.normalized.sum() - 1.0) <= 1e-12
    assert np.all((fv.raw > 0) & (fv.raw <= 1.0))
    assert np.all((fv.normalized >= 0) & (fv.normalized <= 1))
    blocks = infer(rb, z).psi_regressor.reshape(len(rb), -1)
    assert abs(blocks[:, 0].sum() - 1.0) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_single_rule_is_affine(coef, z):
    rb = RuleBase(2, rules=[FuzzyRule([0.1, 0.2], np.eye(2), 1, coef)])
    want = coef[0] + coef[1] * z[0] + coef[2] * z[1]
    assert infer(rb, z).output == pytest.approx(want, abs=1e-12)
