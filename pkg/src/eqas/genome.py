"""Integer genome encoding of circuit architectures.

A genome is a sequence of opcodes from {0, 1, 2, 3}. Reading left to right,
each code appends a block of gates for every qubit: 1 adds a variational
block (Rx, Ry, Rz with fresh trainable angles per qubit), 2 adds an encoding
block (one Rx per qubit whose angle is a fresh trainable scale times the
matching input feature), 3 adds a circular chain of controlled-Z gates, and
0 terminates the architecture with a final variational block before readout.
Everything after the first 0 is inert, so two genomes describe the same
circuit exactly when they agree up to and including their first 0.

A genome with no 0 behaves as if one were appended, except that a genome
already filling all max_len slots keeps at most max_len - 1 blocks so the
terminator always has a slot. Counting distinct architectures over genomes
of length at most L therefore gives sum of 3^(i-1) for i = 1..L.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .quantum import ControlledZ, GateOp, Rotation, ScaledAngle, TrainableAngle

DEFAULT_MAX_LEN = 30
AXES = ("x", "y", "z")


class OpCode(IntEnum):
    MEASURE = 0
    VARIATIONAL = 1
    ENCODING = 2
    ENTANGLE = 3


@dataclass(frozen=True)
class Genome:
    codes: tuple[int, ...]
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self) -> None:
        if self.max_len < 1:
            raise ValueError(f"max_len must be positive, got {self.max_len}")
        if not 1 <= len(self.codes) <= self.max_len:
            raise ValueError(
                f"genome length must be in [1, {self.max_len}], got {len(self.codes)}"
            )
        bad = [c for c in self.codes if c not in (0, 1, 2, 3)]
        if bad:
            raise ValueError(f"genome codes must be in 0..3, got {bad[0]!r}")

    def __str__(self) -> str:
        return "-".join(str(c) for c in self.codes)


def parse_genome(text: str, max_len: int | None = None) -> Genome:
    """Parse a dash-separated genome string such as "1-2-3-0"."""
    parts = text.strip().split("-")
    try:
        codes = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"genome string {text!r} is not dash-separated integers") from None
    if max_len is None:
        max_len = max(DEFAULT_MAX_LEN, len(codes))
    return Genome(codes, max_len)


def canonicalize(genome: Genome) -> Genome:
    """Truncate at the first 0 (inclusive); identity if no 0 is present."""
    codes = genome.codes
    if 0 in codes:
        codes = codes[: codes.index(0) + 1]
    if codes == genome.codes:
        return genome
    return Genome(codes, genome.max_len)


def blocks_of(genome: Genome) -> tuple[OpCode, ...]:
    """Pre-terminal block codes, leaving one slot for the terminator."""
    codes = genome.codes
    if 0 in codes:
        prefix = codes[: codes.index(0)]
    else:
        prefix = codes
    return tuple(OpCode(c) for c in prefix[: genome.max_len - 1])


def normal_form(genome: Genome) -> tuple[int, ...]:
    """Architecture identity key: block codes plus the explicit terminator."""
    return tuple(int(b) for b in blocks_of(genome)) + (0,)


def ring_pairs(n_qubits: int) -> tuple[tuple[int, int], ...]:
    """Circular controlled-Z chain; a pair per edge, none for a single qubit."""
    if n_qubits == 1:
        return ()
    if n_qubits == 2:
        return ((0, 1),)
    pairs = [(q, q + 1) for q in range(n_qubits - 1)]
    pairs.append((n_qubits - 1, 0))
    return tuple(pairs)


@dataclass(frozen=True)
class Architecture:
    blocks: tuple[OpCode, ...]
    n_qubits: int
    gates: tuple[GateOp, ...]
    n_theta: int
    n_lambda: int


@dataclass(frozen=True)
class ParamShape:
    n_theta: int
    n_lambda: int
    n_weights: int


def decode(genome: Genome, n_qubits: int) -> Architecture:
    """Expand a genome into its gate list for the given qubit count."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be positive, got {n_qubits}")
    blocks = blocks_of(genome)
    gates: list[GateOp] = []
    n_theta = 0
    n_lambda = 0
    for code in (*blocks, OpCode.MEASURE):
        if code in (OpCode.VARIATIONAL, OpCode.MEASURE):
            for q in range(n_qubits):
                for axis in AXES:
                    gates.append(Rotation(axis, q, TrainableAngle(n_theta)))
                    n_theta += 1
        elif code is OpCode.ENCODING:
            for q in range(n_qubits):
                gates.append(Rotation("x", q, ScaledAngle(n_lambda, q)))
                n_lambda += 1
        else:
            gates.extend(ControlledZ(a, b) for a, b in ring_pairs(n_qubits))
    return Architecture(blocks, n_qubits, tuple(gates), n_theta, n_lambda)


def param_shape(arch: Architecture, n_actions: int, obs_per_action: int = 1) -> ParamShape:
    """Trainable vector sizes for a policy built on this architecture."""
    if n_actions < 1 or obs_per_action < 1:
        raise ValueError("n_actions and obs_per_action must be positive")
    return ParamShape(arch.n_theta, arch.n_lambda, n_actions * obs_per_action)


def search_space_size(max_len: int) -> int:
    """Number of distinct architectures expressible with genomes up to max_len."""
    if max_len < 1:
        raise ValueError(f"max_len must be positive, got {max_len}")
    return sum(3**i for i in range(max_len))


def random_genome(rng: np.random.Generator, max_len: int = DEFAULT_MAX_LEN) -> Genome:
    """Uniform i.i.d. codes over {0, 1, 2, 3}, canonicalized."""
    codes = tuple(int(c) for c in rng.integers(0, 4, size=max_len))
    return canonicalize(Genome(codes, max_len))


def alternating_baseline(depth: int) -> Genome:
    """Hand-designed layered genome: depth repetitions of (1, 3, 2), then 0."""
    if depth < 1:
        raise ValueError(f"depth must be positive, got {depth}")
    codes = (1, 3, 2) * depth + (0,)
    return Genome(codes, max(DEFAULT_MAX_LEN, len(codes)))


def genome_from_codes(codes: Sequence[int], max_len: int = DEFAULT_MAX_LEN) -> Genome:
    return Genome(tuple(int(c) for c in codes), max_len)
