"""Classic-control tasks with exact Gym dynamics in double precision.

CartPole-v1 and MountainCar-v0 are reimplemented here so episodes are fully
deterministic functions of the reset seed. The physics constants, update
order, termination rules and reset distributions match the Gym classic
control sources. MountainCar additionally adds a height-based shaping term
to the usual -1 step reward so that progress up the hill is visible to the
learner before the first successful episode; the raw Gym reward can be
restored by disabling shaping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StepResult:
    state: np.ndarray
    reward: float
    terminated: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


@dataclass(frozen=True)
class EnvSpec:
    """Per-environment policy and training defaults."""

    name: str
    state_dim: int
    n_actions: int
    max_steps: int
    base_episodes: int
    observables: tuple[tuple[int, ...], ...]
    lr_theta: float
    lr_lambda: float
    lr_weights: float
    gamma: float
    use_baseline: bool
    min_return: float
    max_return: float


CARTPOLE_SPEC = EnvSpec(
    name="CartPole-v1",
    state_dim=4,
    n_actions=2,
    max_steps=500,
    base_episodes=500,
    observables=((0, 1, 2, 3), (0, 1, 2, 3)),
    lr_theta=0.01,
    lr_lambda=0.1,
    lr_weights=0.1,
    gamma=1.0,
    use_baseline=False,
    min_return=1.0,
    max_return=500.0,
)

MOUNTAINCAR_SPEC = EnvSpec(
    name="MountainCar-v0",
    state_dim=2,
    n_actions=3,
    max_steps=200,
    base_episodes=1000,
    observables=((0,), (0, 1), (1,)),
    lr_theta=0.01,
    lr_lambda=0.1,
    lr_weights=0.01,
    gamma=1.0,
    use_baseline=True,
    min_return=-180.0,
    max_return=0.0,
)

SPECS = {CARTPOLE_SPEC.name: CARTPOLE_SPEC, MOUNTAINCAR_SPEC.name: MOUNTAINCAR_SPEC}


def spec_for(name: str) -> EnvSpec:
    try:
        return SPECS[name]
    except KeyError:
        known = ", ".join(sorted(SPECS))
        raise ValueError(f"unknown environment {name!r}; expected one of {known}") from None


class CartPoleEnv:
    """Pole balancing on a cart; reward 1 per step until the pole falls."""

    GRAVITY = 9.8
    CART_MASS = 1.0
    POLE_MASS = 0.1
    TOTAL_MASS = CART_MASS + POLE_MASS
    HALF_LENGTH = 0.5
    POLE_MASS_LENGTH = POLE_MASS * HALF_LENGTH
    FORCE = 10.0
    TAU = 0.02
    X_LIMIT = 2.4
    THETA_LIMIT = 12 * 2 * math.pi / 360

    spec = CARTPOLE_SPEC

    def __init__(self) -> None:
        self._state: np.ndarray | None = None
        self._steps = 0
        self._done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._state = rng.uniform(-0.05, 0.05, size=4)
        self._steps = 0
        self._done = False
        return self._state.copy()

    def step(self, action: int) -> StepResult:
        if self._done or self._state is None:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        if action not in (0, 1):
            raise ValueError(f"CartPole action must be 0 or 1, got {action!r}")
        x, x_dot, theta, theta_dot = self._state
        force = self.FORCE if action == 1 else -self.FORCE
        cos_t = math.cos(theta)
        sin_t = math.sin(theta)
        temp = (force + self.POLE_MASS_LENGTH * theta_dot**2 * sin_t) / self.TOTAL_MASS
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.HALF_LENGTH * (4.0 / 3.0 - self.POLE_MASS * cos_t**2 / self.TOTAL_MASS)
        )
        x_acc = temp - self.POLE_MASS_LENGTH * theta_acc * cos_t / self.TOTAL_MASS
        x = x + self.TAU * x_dot
        x_dot = x_dot + self.TAU * x_acc
        theta = theta + self.TAU * theta_dot
        theta_dot = theta_dot + self.TAU * theta_acc
        self._state = np.array([x, x_dot, theta, theta_dot])
        self._steps += 1
        terminated = abs(x) > self.X_LIMIT or abs(theta) > self.THETA_LIMIT
        truncated = not terminated and self._steps >= self.spec.max_steps
        self._done = terminated or truncated
        return StepResult(self._state.copy(), 1.0, terminated, truncated)


def mountain_height(position: float) -> float:
    """Track height used for reward shaping, in [0.1, 1.0]."""
    return math.sin(3 * position) * 0.45 + 0.55


class MountainCarEnv:
    """Underpowered car in a valley; episodes end at the right hilltop."""

    FORCE = 0.001
    GRAVITY = 0.0025
    MIN_POSITION = -1.2
    MAX_POSITION = 0.6
    MAX_SPEED = 0.07
    GOAL_POSITION = 0.5

    spec = MOUNTAINCAR_SPEC

    def __init__(self, shaped_reward: bool = True) -> None:
        self.shaped_reward = shaped_reward
        self._state: np.ndarray | None = None
        self._steps = 0
        self._done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._state = np.array([rng.uniform(-0.6, -0.4), 0.0])
        self._steps = 0
        self._done = False
        return self._state.copy()

    def step(self, action: int) -> StepResult:
        if self._done or self._state is None:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        if action not in (0, 1, 2):
            raise ValueError(f"MountainCar action must be 0, 1 or 2, got {action!r}")
        position, velocity = self._state
        velocity += (action - 1) * self.FORCE + math.cos(3 * position) * (-self.GRAVITY)
        velocity = min(max(velocity, -self.MAX_SPEED), self.MAX_SPEED)
        position += velocity
        position = min(max(position, self.MIN_POSITION), self.MAX_POSITION)
        if position == self.MIN_POSITION and velocity < 0:
            velocity = 0.0
        self._state = np.array([position, velocity])
        self._steps += 1
        terminated = position >= self.GOAL_POSITION
        truncated = not terminated and self._steps >= self.spec.max_steps
        self._done = terminated or truncated
        reward = -1.0 + mountain_height(position) if self.shaped_reward else -1.0
        return StepResult(self._state.copy(), reward, terminated, truncated)


def make_env(name: str):
    """Instantiate an environment by its Gym id."""
    spec = spec_for(name)
    if spec is CARTPOLE_SPEC:
        return CartPoleEnv()
    return MountainCarEnv()
