"""Dense statevector simulation of parametrized qubit circuits.

Gates are single-qubit rotations (Rx, Ry, Rz) and controlled-Z. A rotation
angle is either read from a trainable angle vector or formed as a trainable
scale times an input feature, which makes every circuit a differentiable
function of both parameter groups. Expectation values of Pauli-Z strings are
computed exactly from the final state (no sampling), and their derivatives
are obtained with a single reverse sweep over the gate list, so the cost of
a full gradient is a small constant times the cost of one forward run.

Basis-state convention: qubit 0 is the most significant bit of the
amplitude index. For two qubits the amplitudes are ordered
|00>, |01>, |10>, |11> with the left bit belonging to qubit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

MAX_QUBITS = 20


@dataclass(frozen=True)
class TrainableAngle:
    """Rotation angle read directly from the trainable angle vector."""

    index: int


@dataclass(frozen=True)
class ScaledAngle:
    """Rotation angle scale[lambda_index] * data[data_index]."""

    lambda_index: int
    data_index: int


AngleSource = Union[TrainableAngle, ScaledAngle]


@dataclass(frozen=True)
class Rotation:
    """Single-qubit rotation about the x, y or z axis."""

    axis: str
    qubit: int
    angle: AngleSource

    def __post_init__(self) -> None:
        if self.axis not in ("x", "y", "z"):
            raise ValueError(f"unknown rotation axis {self.axis!r}")


@dataclass(frozen=True)
class ControlledZ:
    """Controlled-Z between two distinct qubits (symmetric in its arguments)."""

    qubit: int
    partner: int

    def __post_init__(self) -> None:
        if self.qubit == self.partner:
            raise ValueError("controlled-Z needs two distinct qubits")


GateOp = Union[Rotation, ControlledZ]


def init_state(n_qubits: int) -> np.ndarray:
    """Return the all-zeros computational basis state |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return amps


def _n_qubits(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if n < 1 or (1 << n) != dim:
        raise ValueError(f"state dimension {dim} is not a power of two >= 2")
    return n


def _check_qubit(qubit: int, n_qubits: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")


def _rotation_entries(axis: str, angle: float) -> tuple[complex, complex, complex, complex]:
    half = 0.5 * angle
    c, s = math.cos(half), math.sin(half)
    if axis == "x":
        return (c, -1j * s, -1j * s, c)
    if axis == "y":
        return (c, -s, s, c)
    return (complex(c, -s), 0.0, 0.0, complex(c, s))


def _rotation_derivative_entries(axis: str, angle: float) -> tuple[complex, complex, complex, complex]:
    half = 0.5 * angle
    c, s = 0.5 * math.cos(half), 0.5 * math.sin(half)
    if axis == "x":
        return (-s, -1j * c, -1j * c, -s)
    if axis == "y":
        return (-s, -c, c, -s)
    return (complex(-s, -c), 0.0, 0.0, complex(-s, c))


def _apply_one_qubit(
    amps: np.ndarray,
    entries: tuple[complex, complex, complex, complex],
    qubit: int,
    n_qubits: int,
) -> np.ndarray:
    # works on a single state or a stack of states along the leading axis
    m00, m01, m10, m11 = entries
    view = amps.reshape(-1, 2, 1 << (n_qubits - 1 - qubit))
    lo = view[:, 0, :]
    hi = view[:, 1, :]
    out = np.empty_like(view)
    out[:, 0, :] = m00 * lo + m01 * hi
    out[:, 1, :] = m10 * lo + m11 * hi
    return out.reshape(amps.shape)


@lru_cache(maxsize=None)
def _pair_signs(n_qubits: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    both = ((idx >> (n_qubits - 1 - a)) & 1) & ((idx >> (n_qubits - 1 - b)) & 1)
    signs = 1.0 - 2.0 * both
    signs.setflags(write=False)
    return signs


@lru_cache(maxsize=None)
def _zstring_signs(n_qubits: int, qubits: tuple[int, ...]) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    parity = np.zeros(idx.shape, dtype=np.int64)
    for q in qubits:
        parity ^= (idx >> (n_qubits - 1 - q)) & 1
    signs = 1.0 - 2.0 * parity
    signs.setflags(write=False)
    return signs


def apply_rotation(state: np.ndarray, axis: str, qubit: int, angle: float) -> np.ndarray:
    """Apply a rotation about the given axis and return the new state."""
    n = _n_qubits(state)
    _check_qubit(qubit, n)
    if axis not in ("x", "y", "z"):
        raise ValueError(f"unknown rotation axis {axis!r}")
    if not math.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle!r}")
    return _apply_one_qubit(state, _rotation_entries(axis, angle), qubit, n)


def apply_cz(state: np.ndarray, a: int, b: int) -> np.ndarray:
    """Apply a controlled-Z between qubits a and b and return the new state."""
    n = _n_qubits(state)
    _check_qubit(a, n)
    _check_qubit(b, n)
    if a == b:
        raise ValueError("controlled-Z needs two distinct qubits")
    return state * _pair_signs(n, a, b)


def expectation(state: np.ndarray, qubits: Sequence[int]) -> float:
    """Exact expectation of the Pauli-Z string supported on the given qubits."""
    n = _n_qubits(state)
    qs = tuple(qubits)
    if len(set(qs)) != len(qs):
        raise ValueError(f"observable qubits must be distinct, got {qs}")
    for q in qs:
        _check_qubit(q, n)
    prob = state.real * state.real + state.imag * state.imag
    return float(_zstring_signs(n, qs) @ prob)


def _resolve_angle(
    source: AngleSource, theta: np.ndarray, lam: np.ndarray, data: np.ndarray
) -> float:
    if isinstance(source, TrainableAngle):
        if not 0 <= source.index < theta.shape[0]:
            raise IndexError(f"angle index {source.index} outside theta of length {theta.shape[0]}")
        return float(theta[source.index])
    if not 0 <= source.lambda_index < lam.shape[0]:
        raise IndexError(f"scale index {source.lambda_index} outside lambda of length {lam.shape[0]}")
    if not 0 <= source.data_index < data.shape[0]:
        raise IndexError(f"data index {source.data_index} outside input of length {data.shape[0]}")
    return float(lam[source.lambda_index] * data[source.data_index])


def _as_float_vector(x: Sequence[float] | np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a flat vector, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def run_circuit(
    ops: Sequence[GateOp],
    theta: Sequence[float] | np.ndarray,
    lam: Sequence[float] | np.ndarray,
    data: Sequence[float] | np.ndarray,
    n_qubits: int,
) -> np.ndarray:
    """Run the gate list on |0...0> and return the final statevector."""
    theta = _as_float_vector(theta, "theta")
    lam = _as_float_vector(lam, "lambda")
    data = _as_float_vector(data, "data")
    state = init_state(n_qubits)
    for op in ops:
        if isinstance(op, ControlledZ):
            _check_qubit(op.qubit, n_qubits)
            _check_qubit(op.partner, n_qubits)
            state = state * _pair_signs(n_qubits, op.qubit, op.partner)
        else:
            _check_qubit(op.qubit, n_qubits)
            angle = _resolve_angle(op.angle, theta, lam, data)
            state = _apply_one_qubit(state, _rotation_entries(op.axis, angle), op.qubit, n_qubits)
    return state


def expectations_and_gradients(
    ops: Sequence[GateOp],
    theta: Sequence[float] | np.ndarray,
    lam: Sequence[float] | np.ndarray,
    data: Sequence[float] | np.ndarray,
    observables: Sequence[Sequence[int]],
    n_qubits: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Expectations of Z-string observables plus their parameter gradients.

    Returns (values, d_theta, d_lambda) where values has one entry per
    observable and the gradient matrices have one row per observable. The
    reverse sweep keeps a ket and one bra per observable; at each rotation
    the derivative contribution 2 Re <bra| dU |ket> lands on the angle's
    parameter, with the chain-rule factor data[j] for scaled angles. Repeated
    parameter indices accumulate.
    """
    theta = _as_float_vector(theta, "theta")
    lam = _as_float_vector(lam, "lambda")
    data = _as_float_vector(data, "data")
    obs = [tuple(o) for o in observables]
    state = run_circuit(ops, theta, lam, data, n_qubits)
    values = np.array([expectation(state, o) for o in obs])
    d_theta = np.zeros((len(obs), theta.shape[0]))
    d_lam = np.zeros((len(obs), lam.shape[0]))
    if not obs or not any(isinstance(op, Rotation) for op in ops):
        return values, d_theta, d_lam

    bras = np.stack([_zstring_signs(n_qubits, o) * state for o in obs])
    ket = state
    for op in reversed(ops):
        if isinstance(op, ControlledZ):
            signs = _pair_signs(n_qubits, op.qubit, op.partner)
            ket = ket * signs
            bras = bras * signs
            continue
        angle = _resolve_angle(op.angle, theta, lam, data)
        inverse = _rotation_entries(op.axis, -angle)
        ket = _apply_one_qubit(ket, inverse, op.qubit, n_qubits)
        dket = _apply_one_qubit(
            ket, _rotation_derivative_entries(op.axis, angle), op.qubit, n_qubits
        )
        contrib = 2.0 * np.real(np.conj(bras) @ dket)
        src = op.angle
        if isinstance(src, TrainableAngle):
            d_theta[:, src.index] += contrib
        else:
            d_lam[:, src.lambda_index] += contrib * data[src.data_index]
        bras = _apply_one_qubit(bras, inverse, op.qubit, n_qubits)
    return values, d_theta, d_lam


def gradients(
    ops: Sequence[GateOp],
    theta: Sequence[float] | np.ndarray,
    lam: Sequence[float] | np.ndarray,
    data: Sequence[float] | np.ndarray,
    observables: Sequence[Sequence[int]],
    n_qubits: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient matrices (observables x parameters) for both parameter groups."""
    _, d_theta, d_lam = expectations_and_gradients(ops, theta, lam, data, observables, n_qubits)
    return d_theta, d_lam
