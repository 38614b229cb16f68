"""Return recursion, advantage estimation, normalization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dafs.agents import (
    compute_returns,
    gae_advantages,
    normalize_advantages,
    simple_advantages,
)


def brute_force_returns(rewards, dones, gamma):
    """Direct forward-sum oracle: R_t = sum_j gamma^j r_{t+j} up to episode end."""
    n = len(rewards)
    out = np.zeros(n)
    for t in range(n):
        acc = 0.0
        g = 1.0
        for j in range(t, n):
            acc += g * rewards[j]
            if dones[j]:
                break
            g *= gamma
        out[t] = acc
    return out


class TestComputeReturns:
    def test_worked_example(self):
        r = compute_returns([1.0, 1.0, 1.0], [False, False, True], 0.5)
        assert np.allclose(r, [1.75, 1.5, 1.0], atol=1e-15)

    def test_gamma_zero_returns_rewards(self):
        rewards = np.array([3.0, -1.0, 2.0, 0.5])
        r = compute_returns(rewards, [False] * 4, 0.0)
        assert np.array_equal(r, rewards)

    def test_mid_sequence_termination_blocks_flow(self):
        rewards = np.array([1.0, 2.0, 3.0, 4.0])
        dones = np.array([False, True, False, True])
        r = compute_returns(rewards, dones, 0.9)
        oracle = brute_force_returns(rewards, dones, 0.9)
        assert np.allclose(r, oracle, atol=1e-15)
        assert r[1] == 2.0  # terminal step keeps only its own reward

    def test_truncation_bootstraps_tail_value(self):
        # cut is a time limit, not a terminal: value of the next state leaks in
        rewards = np.array([1.0, 1.0])
        dones = np.array([False, True])
        terminated = np.array([False, False])
        r = compute_returns(
            rewards, dones, 0.5, terminated=terminated, tail_values=[0.0, 8.0]
        )
        assert r[1] == pytest.approx(1.0 + 0.5 * 8.0)
        assert r[0] == pytest.approx(1.0 + 0.5 * r[1])

    def test_true_terminal_ignores_tail_value(self):
        r = compute_returns(
            [1.0],
            [True],
            0.9,
            terminated=[True],
            tail_values=[100.0],
        )
        assert r[0] == 1.0

    def test_dangling_batch_tail_bootstraps(self):
        # batch ends mid-episode: the last step behaves like a truncation
        r = compute_returns(
            [1.0, 1.0],
            [False, False],
            0.5,
            terminated=[False, False],
            tail_values=[0.0, 4.0],
        )
        assert r[1] == pytest.approx(3.0)
        assert r[0] == pytest.approx(2.5)

    def test_gamma_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="gamma"):
            compute_returns([1.0], [True], 1.5)
        with pytest.raises(ValueError, match="gamma"):
            compute_returns([1.0], [True], -0.1)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            compute_returns([], [], 0.9)


@settings(max_examples=200, deadline=None)
@given(
    data=st.lists(
        st.tuples(st.floats(-10, 10), st.booleans()), min_size=1, max_size=30
    ),
    gamma=st.floats(0.0, 1.0),
)
def test_property_return_recursion(data, gamma):
    rewards = np.array([d[0] for d in data])
    dones = np.array([d[1] for d in data])
    dones[-1] = True
    r = compute_returns(rewards, dones, gamma)
    # defining recursion: R_t = r_t + gamma * R_{t+1} * (1 - done_t)
    for t in range(len(rewards) - 1):
        cont = 0.0 if dones[t] else gamma * r[t + 1]
        assert abs(r[t] - (rewards[t] + cont)) < 1e-12
    assert r[-1] == rewards[-1]


@settings(max_examples=100, deadline=None)
@given(
    data=st.lists(
        st.tuples(st.floats(-5, 5), st.booleans()), min_size=1, max_size=20
    ),
    gamma=st.floats(0.0, 1.0),
)
def test_property_returns_match_forward_sum(data, gamma):
    rewards = np.array([d[0] for d in data])
    dones = np.array([d[1] for d in data])
    dones[-1] = True
    r = compute_returns(rewards, dones, gamma)
    assert np.allclose(r, brute_force_returns(rewards, dones, gamma), atol=1e-9)


class TestGAE:
    def test_perfect_values_give_zero_advantage(self):
        rewards = np.array([1.0, 1.0, 1.0])
        dones = np.array([False, False, True])
        gamma = 0.9
        returns = compute_returns(rewards, dones, gamma)
        values = returns.copy()
        next_values = np.append(returns[1:], 0.0)
        adv = gae_advantages(
            rewards, values, next_values, dones, dones, gamma, lam=0.95
        )
        assert np.allclose(adv, 0.0, atol=1e-12)

    def test_lambda_one_gamma_one_telescopes(self):
        # with lam = gamma = 1 the sum telescopes to (sum of rewards) - V(s_t)
        rng = np.random.default_rng(7)
        rewards = rng.integers(-3, 4, size=8).astype(float)
        values = rng.integers(-5, 6, size=8).astype(float)
        dones = np.zeros(8, bool)
        dones[-1] = True
        terminated = dones.copy()
        next_values = np.append(values[1:], 0.0)
        adv = gae_advantages(
            rewards, values, next_values, terminated, dones, 1.0, 1.0
        )
        tail = np.cumsum(rewards[::-1])[::-1]
        # integer-valued floats: telescoping must be bitwise exact
        assert np.array_equal(adv, tail - values)

    def test_lambda_zero_is_td_error(self):
        rewards = np.array([1.0, 2.0])
        values = np.array([0.5, 0.25])
        next_values = np.array([0.25, 0.0])
        dones = np.array([False, True])
        adv = gae_advantages(
            rewards, values, next_values, dones, dones, 0.9, 0.0
        )
        assert adv[1] == pytest.approx(2.0 - 0.25)
        assert adv[0] == pytest.approx(1.0 + 0.9 * 0.25 - 0.5)

    def test_termination_kills_bootstrap(self):
        rewards = np.array([1.0])
        values = np.array([0.0])
        next_values = np.array([50.0])
        adv_term = gae_advantages(
            rewards, values, next_values, [True], [True], 0.9, 0.95
        )
        adv_trunc = gae_advantages(
            rewards, values, next_values, [False], [True], 0.9, 0.95
        )
        assert adv_term[0] == pytest.approx(1.0)
        assert adv_trunc[0] == pytest.approx(1.0 + 0.9 * 50.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            gae_advantages([], [], [], [], [], 0.9, 0.95)

    def test_simple_advantages(self):
        adv = simple_advantages([3.0, 1.0], [1.0, 2.0])
        assert np.allclose(adv, [2.0, -1.0])


class TestNormalizeAdvantages:
    def test_zero_mean_unit_std(self):
        rng = np.random.default_rng(11)
        adv = rng.normal(3.0, 7.0, size=257)
        out = normalize_advantages(adv)
        assert abs(out.mean()) < 1e-9
        assert abs(out.std() - 1.0) < 1e-9

    def test_constant_input_maps_to_zeros(self):
        out = normalize_advantages(np.full(16, 4.2))
        assert np.array_equal(out, np.zeros(16))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            normalize_advantages([])
