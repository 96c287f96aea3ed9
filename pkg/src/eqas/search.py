"""Evolutionary architecture search over integer genomes.

A generational NSGA-II loop: binary tournament selection on (rank, crowding
distance), two-point crossover, integer polynomial mutation, duplicate
elimination on architecture normal forms, and survivor selection from the
union of parents and offspring. Fitness is the average episode reward of a
freshly trained policy, so the single objective here is maximized; the
sorting machinery is kept general over objective tuples.

Genomes live in the population as fixed-length code vectors. The region
after the first 0 never reaches the circuit but still recombines, which
lets crossover resurrect material from ancestors. Duplicate detection
ignores that inert region.

Every random draw comes from a stream derived from (seed, stream tag,
generation, ...), and each evaluation receives its own derived seed that is
recorded in the report, so any fitness in a report can be reproduced by
training that genome with that seed. Evaluations are independent of each
other and are collected in slot order, which keeps results byte-identical
for any worker count.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .envs import EnvSpec, spec_for
from .genome import DEFAULT_MAX_LEN, Genome, decode, normal_form, parse_genome
from .seeding import derive_rng, derive_seed
from .training import config_for, fitness, train

logger = logging.getLogger(__name__)

# stream tags under the search seed
_STREAM_INIT = 10
_STREAM_VARIATION = 11
_STREAM_EVAL = 12


@dataclass
class SearchConfig:
    pop_size: int = 20
    generations: int = 20
    max_len: int = DEFAULT_MAX_LEN
    episode_factor: float = 0.8
    crossover_prob: float = 0.9
    mutation_prob: float | None = None
    mutation_eta: float = 20.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.pop_size < 2:
            raise ValueError(f"pop_size must be at least 2, got {self.pop_size}")
        if self.generations < 0:
            raise ValueError(f"generations must be nonnegative, got {self.generations}")
        if self.max_len < 1:
            raise ValueError(f"max_len must be positive, got {self.max_len}")
        if not 0.0 < self.episode_factor <= 1.0:
            raise ValueError(f"episode_factor must be in (0, 1], got {self.episode_factor}")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError(f"crossover_prob must be in [0, 1], got {self.crossover_prob}")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError(f"mutation_prob must be in [0, 1], got {self.mutation_prob}")
        if self.mutation_eta <= 0:
            raise ValueError(f"mutation_eta must be positive, got {self.mutation_eta}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    @property
    def gene_mutation_prob(self) -> float:
        if self.mutation_prob is not None:
            return self.mutation_prob
        return 1.0 / self.max_len


@dataclass(frozen=True)
class Individual:
    genome: Genome
    fitness: float | None = None
    eval_seed: int | None = None
    eval_episodes: int | None = None

    @property
    def key(self) -> tuple[int, ...]:
        return normal_form(self.genome)


def random_vector(rng: np.random.Generator, max_len: int) -> Genome:
    """Uniform fixed-length genome kept at full length (inert tail included)."""
    return Genome(tuple(int(c) for c in rng.integers(0, 4, size=max_len)), max_len)


def two_point_crossover(a: Genome, b: Genome, rng: np.random.Generator) -> tuple[Genome, Genome]:
    """Swap the slice between two cut points i < j chosen uniformly."""
    if len(a.codes) != len(b.codes):
        raise ValueError(
            f"crossover needs equal-length genomes, got {len(a.codes)} and {len(b.codes)}"
        )
    length = len(a.codes)
    i, j = sorted(int(c) for c in rng.choice(length + 1, size=2, replace=False))
    child_a = a.codes[:i] + b.codes[i:j] + a.codes[j:]
    child_b = b.codes[:i] + a.codes[i:j] + b.codes[j:]
    return Genome(child_a, a.max_len), Genome(child_b, b.max_len)


def polynomial_mutation_int(
    genome: Genome, rng: np.random.Generator, eta: float, prob: float
) -> Genome:
    """Bounded polynomial mutation on [0, 3], rounded back to integers.

    Each gene mutates independently with probability prob. The perturbation
    follows the usual bounded polynomial law with distribution index eta, so
    small moves dominate and results stay inside the code range.
    """
    lo, hi = 0.0, 3.0
    span = hi - lo
    codes = list(genome.codes)
    for k in range(len(codes)):
        if rng.random() >= prob:
            continue
        x = float(codes[k])
        d1 = (x - lo) / span
        d2 = (hi - x) / span
        u = rng.random()
        exponent = 1.0 / (eta + 1.0)
        if u < 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            delta = val**exponent - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            delta = 1.0 - val**exponent
        y = x + delta * span
        codes[k] = int(min(hi, max(lo, math.floor(y + 0.5))))
    return Genome(tuple(codes), genome.max_len)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto dominance with all objectives maximized."""
    at_least = all(x >= y for x, y in zip(a, b))
    strictly = any(x > y for x, y in zip(a, b))
    return at_least and strictly


def non_dominated_sort(objectives: Sequence[Sequence[float]]) -> list[list[int]]:
    """Indices grouped into fronts, best front first."""
    n = len(objectives)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    count = [0] * n
    fronts: list[list[int]] = [[]]
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(objectives[i], objectives[j]):
                dominated_by[i].append(j)
                count[j] += 1
            elif dominates(objectives[j], objectives[i]):
                dominated_by[j].append(i)
                count[i] += 1
        if count[i] == 0:
            fronts[0].append(i)
    current = fronts[0]
    while current:
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(j)
        if nxt:
            nxt.sort()
            fronts.append(nxt)
        current = nxt
    return fronts


def crowding_distance(objectives: Sequence[Sequence[float]]) -> np.ndarray:
    """Crowding distances within one front; boundary points get infinity."""
    objs = np.asarray(objectives, dtype=np.float64)
    if objs.ndim == 1:
        objs = objs[:, np.newaxis]
    k, m = objs.shape
    dist = np.zeros(k)
    if k <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(objs[:, j], kind="stable")
        lo = objs[order[0], j]
        hi = objs[order[-1], j]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if hi == lo:
            continue
        for pos in range(1, k - 1):
            gap = objs[order[pos + 1], j] - objs[order[pos - 1], j]
            dist[order[pos]] += gap / (hi - lo)
    return dist


def eliminate_duplicates(
    individuals: Sequence[Individual],
    rng: np.random.Generator,
    taken: Iterable[tuple[int, ...]] = (),
) -> list[Individual]:
    """Drop repeated architectures and refill with fresh random genomes.

    Two individuals count as duplicates when their genomes share a normal
    form. Keys in taken are also excluded, which lets offspring avoid
    colliding with their parents. Refill retries are bounded so tiny search
    spaces (small max_len) cannot loop forever; once retries are exhausted
    the remaining slots accept repeats.
    """
    seen = set(taken)
    kept: list[Individual] = []
    for ind in individuals:
        if ind.key in seen:
            continue
        seen.add(ind.key)
        kept.append(ind)
    target = len(individuals)
    if not individuals:
        return kept
    max_len = individuals[0].genome.max_len
    attempts = 0
    limit = 200 * target
    while len(kept) < target:
        fresh = Individual(random_vector(rng, max_len))
        if fresh.key in seen and attempts < limit:
            attempts += 1
            continue
        seen.add(fresh.key)
        kept.append(fresh)
    return kept


def evaluation_episodes(cfg: SearchConfig, base_episodes: int) -> int:
    """Per-candidate training budget: episode_factor of the base budget."""
    episodes = int(round(cfg.episode_factor * base_episodes))
    return max(1, episodes)


def evaluate_genome(
    codes: Sequence[int], max_len: int, env_name: str, episodes: int, eval_seed: int
) -> float:
    """Train one policy on the genome and return its average episode reward.

    Pure function of its arguments; this is the unit of work handed to
    worker processes. A genome whose evaluation raises is scored with the
    environment's minimum possible average reward.
    """
    spec = spec_for(env_name)
    genome = Genome(tuple(int(c) for c in codes), max_len)
    try:
        arch = decode(genome, spec.state_dim)
        cfg = config_for(spec, episodes=episodes, seed=eval_seed)
        _, curve = train(arch, spec, cfg)
        return fitness(curve)
    except Exception:
        logger.warning("evaluation failed for genome %s; assigning penalty", genome, exc_info=True)
        return spec.min_return


def _evaluate_job(job: tuple) -> float:
    return evaluate_genome(*job)


def evaluate(
    ind: Individual,
    env_spec: EnvSpec,
    base_episodes: int,
    cfg: SearchConfig,
    generation: int,
    slot: int,
) -> Individual:
    """Evaluated copy of the individual for its (generation, slot) position."""
    episodes = evaluation_episodes(cfg, base_episodes)
    eval_seed = derive_seed(cfg.seed, _STREAM_EVAL, generation, slot)
    score = evaluate_genome(ind.genome.codes, cfg.max_len, env_spec.name, episodes, eval_seed)
    return replace(ind, fitness=score, eval_seed=eval_seed, eval_episodes=episodes)


def _evaluate_population(
    individuals: list[Individual],
    env_spec: EnvSpec,
    base_episodes: int,
    cfg: SearchConfig,
    generation: int,
) -> list[Individual]:
    episodes = evaluation_episodes(cfg, base_episodes)
    jobs = []
    slots = []
    for slot, ind in enumerate(individuals):
        if ind.fitness is not None:
            continue
        eval_seed = derive_seed(cfg.seed, _STREAM_EVAL, generation, slot)
        jobs.append((ind.genome.codes, cfg.max_len, env_spec.name, episodes, eval_seed))
        slots.append(slot)
    if not jobs:
        return list(individuals)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            scores = list(pool.map(_evaluate_job, jobs))
    else:
        scores = [_evaluate_job(job) for job in jobs]
    out = list(individuals)
    for slot, job, score in zip(slots, jobs, scores):
        out[slot] = replace(
            out[slot], fitness=score, eval_seed=job[4], eval_episodes=episodes
        )
    return out


def _ranks_and_crowding(individuals: Sequence[Individual]) -> tuple[np.ndarray, np.ndarray]:
    objs = [(ind.fitness,) for ind in individuals]
    fronts = non_dominated_sort(objs)
    rank = np.empty(len(individuals), dtype=np.int64)
    crowd = np.empty(len(individuals))
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance([objs[i] for i in front])
    return rank, crowd


def _tournament(rng: np.random.Generator, rank: np.ndarray, crowd: np.ndarray) -> int:
    i = int(rng.integers(len(rank)))
    j = int(rng.integers(len(rank)))
    if rank[j] < rank[i] or (rank[j] == rank[i] and crowd[j] > crowd[i]):
        return j
    return i


def _survivors(individuals: list[Individual], pop_size: int) -> list[Individual]:
    objs = [(ind.fitness,) for ind in individuals]
    fronts = non_dominated_sort(objs)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= pop_size:
            chosen.extend(front)
            continue
        dist = crowding_distance([objs[i] for i in front])
        order = sorted(range(len(front)), key=lambda p: (-dist[p], p))
        chosen.extend(front[p] for p in order[: pop_size - len(chosen)])
        break
    return [individuals[i] for i in chosen]


def nsga2_generation(
    population: list[Individual],
    cfg: SearchConfig,
    env_spec: EnvSpec,
    base_episodes: int,
    generation: int,
) -> list[Individual]:
    """Produce, evaluate and select the next generation.

    Draw order within a generation is fixed (tournaments, crossover coin,
    cut points, mutation, duplicate refills), so a generation is a pure
    function of the evaluated parents, the config and the generation index.
    """
    if any(ind.fitness is None for ind in population):
        raise ValueError("nsga2_generation needs a fully evaluated population")
    rng = derive_rng(cfg.seed, _STREAM_VARIATION, generation)
    rank, crowd = _ranks_and_crowding(population)
    children: list[Genome] = []
    while len(children) < cfg.pop_size:
        a = population[_tournament(rng, rank, crowd)].genome
        b = population[_tournament(rng, rank, crowd)].genome
        if rng.random() < cfg.crossover_prob:
            child_a, child_b = two_point_crossover(a, b, rng)
        else:
            child_a, child_b = a, b
        for child in (child_a, child_b):
            children.append(polynomial_mutation_int(child, rng, cfg.mutation_eta, cfg.gene_mutation_prob))
    offspring = [Individual(g) for g in children[: cfg.pop_size]]
    parent_keys = {ind.key for ind in population}
    offspring = eliminate_duplicates(offspring, rng, taken=parent_keys)
    offspring = _evaluate_population(offspring, env_spec, base_episodes, cfg, generation)
    return _survivors(population + offspring, cfg.pop_size)


@dataclass
class SearchReport:
    environment: str
    config: SearchConfig
    base_episodes: int
    generations: list[list[Individual]]
    best: Individual

    def to_json(self) -> str:
        config = asdict(self.config)
        del config["workers"]  # execution detail, not part of the search
        payload = {
            "environment": self.environment,
            "config": config,
            "base_episodes": self.base_episodes,
            "generations": [
                [
                    {
                        "genome": str(ind.genome),
                        "fitness": ind.fitness,
                        "eval_seed": ind.eval_seed,
                        "episodes": ind.eval_episodes,
                    }
                    for ind in gen
                ]
                for gen in self.generations
            ],
            "best": {
                "genome": str(self.best.genome),
                "fitness": self.best.fitness,
                "eval_seed": self.best.eval_seed,
                "episodes": self.best.eval_episodes,
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SearchReport":
        payload = json.loads(text)
        cfg = SearchConfig(**payload["config"])

        def to_ind(entry: dict) -> Individual:
            return Individual(
                genome=parse_genome(entry["genome"], cfg.max_len),
                fitness=entry["fitness"],
                eval_seed=entry["eval_seed"],
                eval_episodes=entry["episodes"],
            )

        return cls(
            environment=payload["environment"],
            config=cfg,
            base_episodes=payload["base_episodes"],
            generations=[[to_ind(e) for e in gen] for gen in payload["generations"]],
            best=to_ind(payload["best"]),
        )

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    def write_csv(self, path: str | Path) -> None:
        lines = ["generation,slot,genome,fitness"]
        for g, gen in enumerate(self.generations):
            for slot, ind in enumerate(gen):
                lines.append(f"{g},{slot},{ind.genome},{ind.fitness!r}")
        Path(path).write_text("\n".join(lines) + "\n")


def best_of(population: Sequence[Individual]) -> Individual:
    """Highest fitness; ties go to the earliest slot."""
    best = population[0]
    for ind in population[1:]:
        if ind.fitness > best.fitness:
            best = ind
    return best


def run_search(
    cfg: SearchConfig,
    env_spec: EnvSpec,
    base_episodes: int | None = None,
    on_generation: Callable[[int, list[Individual]], None] | None = None,
) -> SearchReport:
    """Full search loop; returns the report with per-generation populations."""
    if base_episodes is None:
        base_episodes = env_spec.base_episodes
    init_rng = derive_rng(cfg.seed, _STREAM_INIT)
    population = [Individual(random_vector(init_rng, cfg.max_len)) for _ in range(cfg.pop_size)]
    population = eliminate_duplicates(population, init_rng)
    population = _evaluate_population(population, env_spec, base_episodes, cfg, 0)
    history = [population]
    if on_generation is not None:
        on_generation(0, population)
    for generation in range(1, cfg.generations + 1):
        population = nsga2_generation(population, cfg, env_spec, base_episodes, generation)
        history.append(population)
        if on_generation is not None:
            on_generation(generation, population)
    best = best_of([ind for gen in history for ind in gen])
    return SearchReport(
        environment=env_spec.name,
        config=cfg,
        base_episodes=base_episodes,
        generations=history,
        best=best,
    )
