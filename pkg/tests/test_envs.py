"""Environment dynamics against independently coded reference steppers."""

import math

import numpy as np
import pytest

from eqas.envs import (
    CARTPOLE_SPEC,
    MOUNTAINCAR_SPEC,
    CartPoleEnv,
    MountainCarEnv,
    make_env,
    mountain_height,
    spec_for,
)

import oracles


class TestSpecs:
    def test_lookup_by_name(self):
        assert spec_for("CartPole-v1") is CARTPOLE_SPEC
        assert spec_for("MountainCar-v0") is MOUNTAINCAR_SPEC

    def test_unknown_name_lists_alternatives(self):
        with pytest.raises(ValueError, match="CartPole-v1"):
            spec_for("Acrobot-v1")

    def test_make_env_returns_matching_class(self):
        assert isinstance(make_env("CartPole-v1"), CartPoleEnv)
        assert isinstance(make_env("MountainCar-v0"), MountainCarEnv)

    def test_observable_shapes_match_action_counts(self):
        for spec in (CARTPOLE_SPEC, MOUNTAINCAR_SPEC):
            assert len(spec.observables) == spec.n_actions
            for string in spec.observables:
                assert all(0 <= q < spec.state_dim for q in string)


class TestCartPole:
    def test_reset_is_deterministic_and_in_range(self):
        env = CartPoleEnv()
        a = env.reset(123)
        b = CartPoleEnv().reset(123)
        np.testing.assert_array_equal(a, b)
        assert np.all(np.abs(a) <= 0.05)

    def test_reset_matches_reference(self):
        for seed in (0, 1, 99):
            state = CartPoleEnv().reset(seed)
            np.testing.assert_array_equal(state, oracles.cartpole_reset(seed))

    @pytest.mark.parametrize("seed,policy", [
        (0, lambda t: t % 2),
        (7, lambda t: 1),
        (21, lambda t: 0),
        (5, lambda t: (t // 3) % 2),
    ])
    def test_trace_matches_reference(self, seed, policy):
        env = CartPoleEnv()
        state = env.reset(seed)
        ref = tuple(float(v) for v in state)
        for t in range(50):
            action = policy(t)
            result = env.step(action)
            ref, ref_term = oracles.cartpole_step(ref, action)
            np.testing.assert_allclose(result.state, ref, atol=1e-12)
            assert result.reward == 1.0
            assert result.terminated == ref_term
            if result.done:
                break
            state = result.state

    def test_episode_reward_equals_length(self):
        env = CartPoleEnv()
        env.reset(3)
        total = 0.0
        steps = 0
        while True:
            result = env.step(steps % 2)
            total += result.reward
            steps += 1
            if result.done:
                break
        assert total == float(steps)

    def test_truncates_at_max_steps(self):
        """A bang-bang balancer keeps the pole up until the step cap."""
        env = CartPoleEnv()
        state = env.reset(0)
        result = None
        for _ in range(CARTPOLE_SPEC.max_steps):
            x, x_dot, theta, theta_dot = state
            action = 1 if (2.0 * theta + theta_dot + 0.05 * x + 0.1 * x_dot) > 0 else 0
            result = env.step(action)
            state = result.state
        assert result.truncated and not result.terminated

    def test_step_after_done_raises(self):
        env = CartPoleEnv()
        env.reset(0)
        env._state = np.array([0.0, 0.0, 0.22, 0.0])  # beyond the angle limit
        result = env.step(0)
        assert result.terminated
        with pytest.raises(RuntimeError, match="reset"):
            env.step(0)

    def test_step_before_reset_raises(self):
        with pytest.raises(RuntimeError, match="reset"):
            CartPoleEnv().step(0)

    def test_invalid_action_rejected(self):
        env = CartPoleEnv()
        env.reset(0)
        with pytest.raises(ValueError, match="action"):
            env.step(2)


class TestMountainCar:
    def test_reset_position_range_and_zero_velocity(self):
        for seed in range(5):
            state = MountainCarEnv().reset(seed)
            assert -0.6 <= state[0] <= -0.4
            assert state[1] == 0.0
            np.testing.assert_array_equal(state, oracles.mountaincar_reset(seed))

    @pytest.mark.parametrize("seed,policy", [
        (0, lambda t: 2),
        (3, lambda t: 0),
        (11, lambda t: (t // 5) % 3),
    ])
    def test_trace_matches_reference(self, seed, policy):
        env = MountainCarEnv()
        env.reset(seed)
        ref = oracles.mountaincar_reset(seed)
        for t in range(50):
            action = policy(t)
            result = env.step(action)
            ref, ref_reward, ref_term = oracles.mountaincar_step(ref, action)
            np.testing.assert_allclose(result.state, ref, atol=1e-12)
            assert result.reward == pytest.approx(ref_reward, abs=1e-12)
            assert result.terminated == ref_term
            if result.done:
                break

    def test_reward_is_shaped_by_height(self):
        env = MountainCarEnv()
        env.reset(1)
        result = env.step(2)
        position = result.state[0]
        assert result.reward == pytest.approx(-1.0 + mountain_height(position), abs=1e-15)
        assert -0.9 <= result.reward <= 0.0

    def test_unshaped_reward_is_minus_one(self):
        env = MountainCarEnv(shaped_reward=False)
        env.reset(1)
        assert env.step(2).reward == -1.0

    def test_height_known_values(self):
        assert mountain_height(0.5) == pytest.approx(0.9988727439718246, abs=1e-12)
        assert mountain_height(-math.pi / 6) == pytest.approx(0.1, abs=1e-12)

    def test_velocity_zeroed_at_left_wall(self):
        env = MountainCarEnv()
        env.reset(0)
        env._state = np.array([-1.19, -0.07])
        result = env.step(0)
        assert result.state[0] == -1.2
        assert result.state[1] == 0.0

    def test_terminates_at_goal(self):
        env = MountainCarEnv()
        env.reset(0)
        env._state = np.array([0.47, 0.07])
        result = env.step(2)
        assert result.terminated
        assert result.state[0] >= 0.5

    def test_truncates_at_max_steps(self):
        env = MountainCarEnv()
        env.reset(0)
        result = None
        for _ in range(MOUNTAINCAR_SPEC.max_steps):
            result = env.step(1)  # coasting never reaches the goal
        assert result.truncated and not result.terminated

    def test_full_idle_episode_return_bounds(self):
        env = MountainCarEnv()
        env.reset(4)
        total = 0.0
        while True:
            result = env.step(1)
            total += result.reward
            if result.done:
                break
        assert MOUNTAINCAR_SPEC.min_return <= total <= MOUNTAINCAR_SPEC.max_return

    def test_invalid_action_rejected(self):
        env = MountainCarEnv()
        env.reset(0)
        with pytest.raises(ValueError, match="action"):
            env.step(3)


def test_long_random_traces_match_reference():
    """Several hundred steps with seeded random actions, both environments."""
    rng = np.random.default_rng(2718)
    for seed in range(3):
        env = CartPoleEnv()
        env.reset(seed)
        ref = oracles.cartpole_reset(seed)
        while True:
            action = int(rng.integers(2))
            result = env.step(action)
            ref, ref_term = oracles.cartpole_step(ref, action)
            np.testing.assert_allclose(result.state, ref, atol=1e-12)
            assert result.terminated == ref_term
            if result.done:
                break
    for seed in range(3):
        env = MountainCarEnv()
        env.reset(seed)
        ref = oracles.mountaincar_reset(seed)
        for _ in range(200):
            action = int(rng.integers(3))
            result = env.step(action)
            ref, ref_reward, ref_term = oracles.mountaincar_step(ref, action)
            np.testing.assert_allclose(result.state, ref, atol=1e-12)
            assert result.reward == pytest.approx(ref_reward, abs=1e-12)
            if result.done:
                break
