"""Monte Carlo policy-gradient training of circuit policies.

Plain REINFORCE: run batch_size episodes with the current parameters,
compute discounted returns-to-go, and take one ascent step per parameter
group (angles, encoding scales, readout weights) with its own learning
rate. An optional baseline subtracts the batch mean of total episode
returns from every return-to-go before weighting the gradients.

Ascent steps go through Adam by default. That choice is load-bearing, not
cosmetic: when every action shares one observable and the readout weights
start equal, the angle gradients vanish identically at initialization and
only a faint weight gradient is left. Adam's normalization turns that
faint signal into full-size steps and the symmetry breaks within a few
batches; un-normalized gradient ascent stalls near the starting policy at
these learning rates. Plain ascent stays available as optimizer="sgd".

All randomness is derived from the config seed via fixed stream tags, so a
training run is reproducible down to the last bit: parameter init, action
sampling and environment resets each get their own independent stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .envs import EnvSpec, make_env
from .genome import Architecture
from .policy import EnvObservables, PolicyParams, sample_step
from .seeding import derive_rng, derive_seed

# stream tags under the root seed
_STREAM_INIT = 0
_STREAM_ACTION = 1
_STREAM_RESET = 2

OPTIMIZERS = ("adam", "sgd")


@dataclass
class TrainConfig:
    episodes: int
    batch_size: int = 10
    lr_theta: float = 0.01
    lr_lambda: float = 0.1
    lr_weights: float = 0.1
    gamma: float = 1.0
    use_baseline: bool = False
    beta: float = 1.0
    preprocess: str = "atan"
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-7
    seed: int = 0

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ValueError(f"episodes must be positive, got {self.episodes}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        for name in ("lr_theta", "lr_lambda", "lr_weights", "beta", "adam_eps"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive finite number, got {value}")
        for name in ("adam_beta1", "adam_beta2"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {value}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")


def config_for(spec: EnvSpec, episodes: int | None = None, seed: int = 0, **overrides) -> TrainConfig:
    """TrainConfig filled with the per-environment defaults."""
    base = dict(
        episodes=spec.base_episodes if episodes is None else episodes,
        lr_theta=spec.lr_theta,
        lr_lambda=spec.lr_lambda,
        lr_weights=spec.lr_weights,
        gamma=spec.gamma,
        use_baseline=spec.use_baseline,
        seed=seed,
    )
    base.update(overrides)
    return TrainConfig(**base)


def initial_params(arch: Architecture, n_actions: int, rng: np.random.Generator, beta: float = 1.0) -> PolicyParams:
    """Angles uniform on [0, 2*pi); scales and weights start at one."""
    return PolicyParams(
        theta=rng.uniform(0.0, 2.0 * math.pi, size=arch.n_theta),
        lam=np.ones(arch.n_lambda),
        weights=np.ones((n_actions, 1)),
        beta=beta,
    )


def compute_returns(rewards: Sequence[float], gamma: float) -> np.ndarray:
    """Discounted returns-to-go G_t = sum_k gamma^(k-t) r_k."""
    out = np.empty(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


@dataclass
class Trajectory:
    rewards: list[float] = field(default_factory=list)
    grads: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    def __len__(self) -> int:
        return len(self.rewards)


def run_episode(
    env,
    arch: Architecture,
    params: PolicyParams,
    obs: EnvObservables,
    action_rng: np.random.Generator,
    reset_seed: int,
    preprocess: str = "atan",
) -> Trajectory:
    """Roll out one episode, recording per-step rewards and gradients."""
    state = env.reset(reset_seed)
    traj = Trajectory()
    while True:
        action, _, grads = sample_step(arch, params, obs, state, action_rng, preprocess)
        result = env.step(action)
        traj.rewards.append(result.reward)
        traj.grads.append(grads)
        if result.done:
            return traj
        state = result.state


@dataclass
class AdamState:
    """Running first and second gradient moments for one parameter group."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def like(cls, arr: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(arr), v=np.zeros_like(arr), step=0)

    def update(self, grad: np.ndarray, lr: float, cfg: TrainConfig) -> np.ndarray:
        """Advance the moments and return the bias-corrected ascent increment."""
        self.step += 1
        self.m = cfg.adam_beta1 * self.m + (1.0 - cfg.adam_beta1) * grad
        self.v = cfg.adam_beta2 * self.v + (1.0 - cfg.adam_beta2) * grad * grad
        m_hat = self.m / (1.0 - cfg.adam_beta1**self.step)
        v_hat = self.v / (1.0 - cfg.adam_beta2**self.step)
        return lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


@dataclass
class OptimizerState:
    """Adam moments for all three parameter groups, carried across updates."""

    theta: AdamState
    lam: AdamState
    weights: AdamState

    @classmethod
    def for_params(cls, params: PolicyParams) -> "OptimizerState":
        return cls(
            theta=AdamState.like(params.theta),
            lam=AdamState.like(params.lam),
            weights=AdamState.like(params.weights),
        )


def batch_update(
    params: PolicyParams,
    batch: Sequence[Trajectory],
    cfg: TrainConfig,
    opt: OptimizerState | None = None,
) -> PolicyParams:
    """One REINFORCE ascent step from a batch of trajectories.

    With the adam optimizer the caller owns the OptimizerState and passes
    it to every update so the moments accumulate across batches; sgd needs
    no carried state.
    """
    if not batch:
        raise ValueError("batch_update needs at least one trajectory")
    if cfg.optimizer == "adam" and opt is None:
        raise ValueError("adam updates need an OptimizerState carried across batches")
    baseline = 0.0
    if cfg.use_baseline:
        baseline = float(np.mean([traj.total_reward for traj in batch]))
    acc_theta = np.zeros_like(params.theta)
    acc_lam = np.zeros_like(params.lam)
    acc_w = np.zeros_like(params.weights)
    for traj in batch:
        advantages = compute_returns(traj.rewards, cfg.gamma) - baseline
        for adv, (g_theta, g_lam, g_w) in zip(advantages, traj.grads):
            acc_theta += adv * g_theta
            acc_lam += adv * g_lam
            acc_w += adv * g_w
    scale = 1.0 / len(batch)
    acc_theta *= scale
    acc_lam *= scale
    acc_w *= scale
    if cfg.optimizer == "adam":
        step_theta = opt.theta.update(acc_theta, cfg.lr_theta, cfg)
        step_lam = opt.lam.update(acc_lam, cfg.lr_lambda, cfg)
        step_w = opt.weights.update(acc_w, cfg.lr_weights, cfg)
    else:
        step_theta = cfg.lr_theta * acc_theta
        step_lam = cfg.lr_lambda * acc_lam
        step_w = cfg.lr_weights * acc_w
    new = PolicyParams(
        theta=params.theta + step_theta,
        lam=params.lam + step_lam,
        weights=params.weights + step_w,
        beta=params.beta,
    )
    for name, arr in (("theta", new.theta), ("lambda", new.lam), ("weights", new.weights)):
        if arr.size and not np.all(np.isfinite(arr)):
            raise RuntimeError(f"training diverged: non-finite {name} after update")
    return new


def train(arch: Architecture, spec: EnvSpec, cfg: TrainConfig) -> tuple[PolicyParams, np.ndarray]:
    """Train a policy on the environment; returns final params and the curve.

    The curve holds one total reward per episode, in order. Updates fire
    every batch_size episodes; a trailing partial batch is left unused.
    """
    env = make_env(spec.name)
    obs = EnvObservables(spec.observables)
    params = initial_params(arch, spec.n_actions, derive_rng(cfg.seed, _STREAM_INIT), cfg.beta)
    opt = OptimizerState.for_params(params) if cfg.optimizer == "adam" else None
    curve = np.empty(cfg.episodes)
    batch: list[Trajectory] = []
    for episode in range(cfg.episodes):
        action_rng = derive_rng(cfg.seed, _STREAM_ACTION, episode)
        reset_seed = derive_seed(cfg.seed, _STREAM_RESET, episode)
        traj = run_episode(env, arch, params, obs, action_rng, reset_seed, cfg.preprocess)
        curve[episode] = traj.total_reward
        batch.append(traj)
        if len(batch) == cfg.batch_size:
            params = batch_update(params, batch, cfg, opt)
            batch = []
    return params, curve


def fitness(curve: np.ndarray) -> float:
    """Average per-episode reward over a learning curve."""
    arr = np.asarray(curve, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("fitness needs a nonempty learning curve")
    return float(np.mean(arr))
