"""Softmax policy over Pauli-Z expectations of a parametrized circuit.

Each action a gets a logit beta * w_a * <O_a>, where O_a is the Z-string
observable assigned to that action and w_a its trainable weight. Actions may
share an observable (the circuit is still evaluated once per distinct
string) while keeping independent weights. Raw environment states pass
through an elementwise arctan by default so unbounded features land in a
bounded angle range; identity preprocessing is available for comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import quantum
from .genome import Architecture, Genome, decode, parse_genome

PREPROCESS_MODES = ("atan", "identity")


@dataclass(frozen=True)
class EnvObservables:
    """One Z-string observable (tuple of qubit indices) per action."""

    per_action: tuple[tuple[int, ...], ...]

    @property
    def n_actions(self) -> int:
        return len(self.per_action)


@dataclass
class PolicyParams:
    theta: np.ndarray
    lam: np.ndarray
    weights: np.ndarray
    beta: float = 1.0


def preprocess_state(raw: np.ndarray, mode: str = "atan") -> np.ndarray:
    """Map a raw environment state to circuit input features."""
    arr = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("environment state contains non-finite values")
    if mode == "atan":
        return np.arctan(arr)
    if mode == "identity":
        return arr.copy()
    raise ValueError(f"unknown preprocessing mode {mode!r}; expected one of {PREPROCESS_MODES}")


def _check_policy(arch: Architecture, params: PolicyParams, obs: EnvObservables) -> None:
    if params.theta.shape != (arch.n_theta,):
        raise ValueError(
            f"theta has shape {params.theta.shape}, architecture needs ({arch.n_theta},)"
        )
    if params.lam.shape != (arch.n_lambda,):
        raise ValueError(
            f"lambda has shape {params.lam.shape}, architecture needs ({arch.n_lambda},)"
        )
    if params.weights.shape != (obs.n_actions, 1):
        raise ValueError(
            f"weights has shape {params.weights.shape}, expected ({obs.n_actions}, 1)"
        )
    for string in obs.per_action:
        for q in string:
            if not 0 <= q < arch.n_qubits:
                raise IndexError(f"observable qubit {q} out of range for {arch.n_qubits} qubits")


def _unique_observables(obs: EnvObservables) -> tuple[list[tuple[int, ...]], list[int]]:
    unique: list[tuple[int, ...]] = []
    index_of: dict[tuple[int, ...], int] = {}
    mapping = []
    for string in obs.per_action:
        if string not in index_of:
            index_of[string] = len(unique)
            unique.append(string)
        mapping.append(index_of[string])
    return unique, mapping


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / np.sum(e)


def action_probs(
    arch: Architecture,
    params: PolicyParams,
    obs: EnvObservables,
    state: np.ndarray,
    preprocess: str = "atan",
) -> np.ndarray:
    """Action distribution of the policy in the given environment state."""
    _check_policy(arch, params, obs)
    data = preprocess_state(state, preprocess)
    unique, mapping = _unique_observables(obs)
    final = quantum.run_circuit(arch.gates, params.theta, params.lam, data, arch.n_qubits)
    values = np.array([quantum.expectation(final, o) for o in unique])
    logits = params.beta * params.weights[:, 0] * values[mapping]
    return _softmax(logits)


def _policy_forward_backward(
    arch: Architecture,
    params: PolicyParams,
    obs: EnvObservables,
    state: np.ndarray,
    preprocess: str,
) -> tuple[np.ndarray, np.ndarray, list[int], np.ndarray, np.ndarray]:
    _check_policy(arch, params, obs)
    data = preprocess_state(state, preprocess)
    unique, mapping = _unique_observables(obs)
    values_u, d_theta_u, d_lam_u = quantum.expectations_and_gradients(
        arch.gates, params.theta, params.lam, data, unique, arch.n_qubits
    )
    values = values_u[mapping]
    probs = _softmax(params.beta * params.weights[:, 0] * values)
    return probs, values, mapping, d_theta_u, d_lam_u


def _grads_for_action(
    params: PolicyParams,
    action: int,
    probs: np.ndarray,
    values: np.ndarray,
    mapping: list[int],
    d_theta_u: np.ndarray,
    d_lam_u: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    coef = -probs.copy()
    coef[action] += 1.0
    d_weights = (params.beta * coef * values)[:, np.newaxis]
    scale = params.beta * coef * params.weights[:, 0]
    d_theta = scale @ d_theta_u[mapping]
    d_lam = scale @ d_lam_u[mapping]
    return d_theta, d_lam, d_weights


def log_prob_grads(
    arch: Architecture,
    params: PolicyParams,
    obs: EnvObservables,
    state: np.ndarray,
    action: int,
    preprocess: str = "atan",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient of log pi(action | state) for each parameter group.

    Returns (d_theta, d_lambda, d_weights). With logits
    z_b = beta * w_b * <O_b>, the chain rule gives
    d log pi(a) / d p = sum_b (delta_ab - pi(b)) dz_b / d p.
    """
    if not 0 <= action < obs.n_actions:
        raise IndexError(f"action {action} out of range for {obs.n_actions} actions")
    probs, values, mapping, d_theta_u, d_lam_u = _policy_forward_backward(
        arch, params, obs, state, preprocess
    )
    return _grads_for_action(params, action, probs, values, mapping, d_theta_u, d_lam_u)


def sample_step(
    arch: Architecture,
    params: PolicyParams,
    obs: EnvObservables,
    state: np.ndarray,
    rng: np.random.Generator,
    preprocess: str = "atan",
) -> tuple[int, np.ndarray, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Sample an action and return its log-probability gradients.

    One circuit evaluation (forward plus reverse sweep) serves both the
    sampling distribution and the gradients, which matters because this runs
    once per environment step.
    """
    probs, values, mapping, d_theta_u, d_lam_u = _policy_forward_backward(
        arch, params, obs, state, preprocess
    )
    action = int(rng.choice(obs.n_actions, p=probs))
    grads = _grads_for_action(params, action, probs, values, mapping, d_theta_u, d_lam_u)
    return action, probs, grads


def save_checkpoint(
    path: str | Path,
    env_name: str,
    genome: Genome,
    params: PolicyParams,
    obs: EnvObservables,
) -> None:
    """Write a policy checkpoint as JSON."""
    payload = {
        "environment": env_name,
        "genome": str(genome),
        "theta": [float(v) for v in params.theta],
        "lambda": [float(v) for v in params.lam],
        "weights": [[float(v) for v in row] for row in params.weights],
        "beta": float(params.beta),
        "observables": [list(o) for o in obs.per_action],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path: str | Path) -> tuple[str, Genome, PolicyParams, EnvObservables]:
    """Read a checkpoint written by save_checkpoint."""
    payload = json.loads(Path(path).read_text())
    genome = parse_genome(payload["genome"])
    params = PolicyParams(
        theta=np.asarray(payload["theta"], dtype=np.float64),
        lam=np.asarray(payload["lambda"], dtype=np.float64),
        weights=np.asarray(payload["weights"], dtype=np.float64),
        beta=float(payload["beta"]),
    )
    obs = EnvObservables(tuple(tuple(int(q) for q in o) for o in payload["observables"]))
    return payload["environment"], genome, params, obs


def policy_for(genome: Genome, n_qubits: int) -> Architecture:
    """Convenience wrapper: decode a genome for use with the policy functions."""
    return decode(genome, n_qubits)
