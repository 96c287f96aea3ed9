"""Descriptive statistics over search results and learning curves."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .genome import Genome, normal_form


def op_frequency(genomes: Sequence[Genome]) -> np.ndarray:
    """Opcode distribution per genome position, as a (positions, 4) matrix.

    Genomes are taken in normal form, so column 0 collects both explicit
    terminators and the positions past a genome's end; every row sums to
    one. Rows run up to the longest normal form in the input.
    """
    if not genomes:
        raise ValueError("op_frequency needs at least one genome")
    forms = [normal_form(g) for g in genomes]
    n_pos = max(len(f) for f in forms)
    counts = np.zeros((n_pos, 4))
    for form in forms:
        for pos in range(n_pos):
            code = form[pos] if pos < len(form) else 0
            counts[pos, code] += 1.0
    return counts / len(forms)


def smooth(curve: Sequence[float], window: int) -> np.ndarray:
    """Trailing moving average; early entries average what exists so far."""
    if window < 1:
        raise ValueError(f"window must be positive, got {window}")
    x = np.asarray(curve, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"curve must be one-dimensional, got shape {x.shape}")
    out = np.empty_like(x)
    for t in range(x.shape[0]):
        start = max(0, t - window + 1)
        out[t] = np.sum(x[start : t + 1]) / (t + 1 - start)
    return out


def top_architectures(
    entries: Iterable[tuple[Genome, float]], k: int
) -> list[tuple[Genome, float]]:
    """Best k distinct architectures by fitness.

    Entries sharing a normal form collapse to their best-scoring occurrence
    (first seen wins ties). Returns fewer than k when the input holds fewer
    distinct architectures.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    best: dict[tuple[int, ...], tuple[Genome, float]] = {}
    order: list[tuple[int, ...]] = []
    for genome, score in entries:
        key = normal_form(genome)
        if key not in best:
            best[key] = (genome, score)
            order.append(key)
        elif score > best[key][1]:
            best[key] = (genome, score)
    ranked = sorted(order, key=lambda key: -best[key][1])
    return [best[key] for key in ranked[:k]]
