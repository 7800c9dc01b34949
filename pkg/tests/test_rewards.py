"""Reward normalization, distillation loss, and GRPO surrogate tests."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tokenworld import rewards

CFG = rewards.RewardConfig()


def test_rubric_maxima():
    assert rewards.RUBRIC_MAX == (3.0, 2.0, 1.0, 1.0, 1.0, 2.0)


def test_normalize_full_marks_is_ones():
    v = rewards.normalize_scores(rewards.ScoreVector(rewards.RUBRIC_MAX))
    np.testing.assert_allclose(v, np.ones(6))


def test_normalize_hand_case():
    v = rewards.normalize_scores(rewards.ScoreVector((1.5, 1.0, 0.5, 0.0, 1.0, 0.5)))
    np.testing.assert_allclose(v, [0.5, 0.5, 0.5, 0.0, 1.0, 0.25])


def test_score_vector_validation():
    with pytest.raises(ValueError):
        rewards.ScoreVector((3.5, 0, 0, 0, 0, 0))
    with pytest.raises(ValueError):
        rewards.ScoreVector((0, 0, 0, 0, 0))


def test_composite_reward_uniform_weights():
    v = np.array([0.5, 0.5, 0.5, 0.0, 1.0, 0.25])
    assert rewards.composite_reward(v) == pytest.approx(v.mean())
    assert rewards.composite_reward(np.ones(6)) == pytest.approx(1.0)


def test_composite_reward_custom_weights():
    v = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    w = np.array([2.0, 0, 0, 0, 0, 0])
    assert rewards.composite_reward(v, w) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rewards.composite_reward(v, np.ones(5))


def test_huber_branches():
    # Quadratic below the threshold, linear above, continuous at it.
    assert rewards.huber(0.0, 0.5) == 0.0
    assert rewards.huber(0.3, 0.5) == pytest.approx(0.045)
    assert rewards.huber(-0.3, 0.5) == pytest.approx(0.045)
    assert rewards.huber(0.5, 0.5) == pytest.approx(0.125)
    assert rewards.huber(2.0, 0.5) == pytest.approx(0.5 * (2.0 - 0.25))


def test_distill_loss_identical_is_zero():
    s = np.array([0.5, 0.1, 0.9, 0.0, 1.0, 0.3])
    assert rewards.distill_loss(s, s) == 0.0


def test_distill_loss_hand_values():
    # Single small residual 0.2 in one dimension: 0.5 * 0.04 = 0.02.
    s = np.zeros(6)
    t = np.zeros(6)
    t[2] = 0.2
    assert rewards.distill_loss(s, t) == pytest.approx(0.02)
    # Residual 1.0 exceeds delta: 0.5 * (1 - 0.25) = 0.375.
    t2 = np.zeros(6)
    t2[0] = 1.0
    assert rewards.distill_loss(s, t2) == pytest.approx(0.375)


def test_distill_loss_weights_scale():
    s = np.zeros(2)
    t = np.array([0.2, 0.2])
    assert rewards.distill_loss(s, t, weights=[2.0, 0.0]) == pytest.approx(0.04)
    with pytest.raises(ValueError):
        rewards.distill_loss(np.zeros(3), np.zeros(2))


def test_group_advantages_three_point_anchor():
    adv = rewards.group_advantages([1.0, 2.0, 3.0])
    np.testing.assert_allclose(adv, [-1.224744871, 0.0, 1.224744871],
                               atol=1e-9)


def test_group_advantages_population_std():
    # Oracle: direct formula with the population (ddof=0) std.
    r = np.array([0.0, 1.0, 1.0, 4.0])
    expected = (r - r.mean()) / r.std(ddof=0)
    np.testing.assert_allclose(rewards.group_advantages(r), expected)


def test_group_advantages_degenerate_guard():
    np.testing.assert_array_equal(rewards.group_advantages([2.0, 2.0, 2.0]),
                                  np.zeros(3))
    np.testing.assert_array_equal(
        rewards.group_advantages([1.0, 1.0 + 1e-12]), np.zeros(2))
    with pytest.raises(ValueError):
        rewards.group_advantages([1.0])


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=12))
def test_group_advantages_zero_mean_unit_std(vals):
    adv = rewards.group_advantages(vals)
    if np.any(adv):
        assert abs(adv.mean()) < 1e-9
        assert np.std(adv) == pytest.approx(1.0, abs=1e-9)


def group_for(logp_new, logp_old, rewards_=None, logp_ref=None):
    n = len(logp_new)
    return rewards.RolloutGroup(
        rewards=tuple(rewards_ or [0.0] * n),
        logp_new=tuple(logp_new),
        logp_old=tuple(logp_old),
        logp_ref=tuple(logp_ref or logp_old),
    )


def test_grpo_clip_hand_cases():
    # rho = 1.5, A = +1: clipped to 1.2 -> surrogate term 1.2.
    g = group_for([math.log(1.5), 0.0], [0.0, 0.0])
    _, terms, _ = rewards.grpo_objective(g, [1.0, 0.0], CFG, kl=0.0)
    assert terms[0] == pytest.approx(1.2)
    # rho = 0.5, A = -1: min(-0.5, -0.8) picks the clipped branch, -0.8.
    g = group_for([math.log(0.5), 0.0], [0.0, 0.0])
    _, terms, _ = rewards.grpo_objective(g, [-1.0, 0.0], CFG, kl=0.0)
    assert terms[0] == pytest.approx(-0.8)


def test_grpo_loss_value_and_kl_penalty():
    g = group_for([0.0, 0.0], [0.0, 0.0])
    loss, terms, kl = rewards.grpo_objective(g, [1.0, -1.0], CFG, kl=3.0)
    np.testing.assert_allclose(terms, [1.0, -1.0])
    assert kl == 3.0
    assert loss == pytest.approx(0.0 + 0.01 * 3.0)


def test_grpo_plug_in_kl():
    g = group_for([1.0, 2.0], [0.0, 0.0], logp_ref=[0.5, 0.5])
    _, _, kl = rewards.grpo_objective(g, [0.0, 0.0], CFG)
    assert kl == pytest.approx(np.mean([1.0 - 0.5, 2.0 - 0.5]))


def test_grpo_ratio_log_clamp():
    g = group_for([100.0, 0.0], [0.0, 0.0])
    _, terms, _ = rewards.grpo_objective(g, [-1.0, 0.0], CFG, kl=0.0)
    # Log-ratio 100 is clamped to 20; with A = -1 the min picks the
    # unclipped branch: min(e^20 * -1, 1.2 * -1) = -e^20.
    assert terms[0] == pytest.approx(-math.exp(20))


def test_grpo_validation():
    with pytest.raises(ValueError):
        group_for([0.0], [0.0])
    with pytest.raises(ValueError):
        group_for([0.0, float("inf")], [0.0, 0.0])
    g = group_for([0.0, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        rewards.grpo_objective(g, [0.0], CFG, kl=0.0)


def test_reward_config_validation():
    with pytest.raises(ValueError):
        rewards.RewardConfig(huber_delta=0.0)
    with pytest.raises(ValueError):
        rewards.RewardConfig(clip_eps=1.5)
    with pytest.raises(ValueError):
        rewards.RewardConfig(kl_beta=-0.1)
