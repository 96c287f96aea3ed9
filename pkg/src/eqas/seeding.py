"""Deterministic random-stream derivation from a root seed.

Every stochastic component draws from a generator derived from a tuple of
integers (root seed, component tag, indices...). Identical tuples give
identical streams, so whole runs replay bit for bit regardless of worker
count or evaluation order.
"""

from __future__ import annotations

from numpy.random import PCG64, Generator, SeedSequence


def derive_rng(*path: int) -> Generator:
    """Generator seeded from the integer path."""
    return Generator(PCG64(SeedSequence(tuple(int(p) for p in path))))


def derive_seed(*path: int) -> int:
    """Single nonnegative integer seed derived from the integer path."""
    return int(SeedSequence(tuple(int(p) for p in path)).generate_state(1)[0])
