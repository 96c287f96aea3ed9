"""Evolutionary machinery: variation, sorting, selection, full runs."""

import dataclasses
from collections import Counter

import numpy as np
import pytest

from eqas.envs import CARTPOLE_SPEC
from eqas.genome import Genome, normal_form
from eqas.search import (
    Individual,
    SearchConfig,
    SearchReport,
    best_of,
    crowding_distance,
    dominates,
    eliminate_duplicates,
    evaluate,
    evaluate_genome,
    evaluation_episodes,
    non_dominated_sort,
    nsga2_generation,
    polynomial_mutation_int,
    random_vector,
    run_search,
    two_point_crossover,
)

FAST = SearchConfig(pop_size=4, generations=2, max_len=8, seed=0)
FAST_EPISODES = 4  # round(0.8 * 4) = 3 episodes per evaluation


class TestVariation:
    def test_crossover_preserves_genes_positionwise(self):
        """At every locus the children hold the parents' two genes."""
        rng = np.random.default_rng(0)
        a = Genome((0, 0, 0, 0, 0, 0), max_len=6)
        b = Genome((1, 1, 1, 1, 1, 1), max_len=6)
        for _ in range(50):
            child_a, child_b = two_point_crossover(a, b, rng)
            for x, y in zip(child_a.codes, child_b.codes):
                assert {x, y} == {0, 1}

    def test_crossover_swaps_a_contiguous_slice(self):
        rng = np.random.default_rng(1)
        a = Genome((0,) * 8, max_len=8)
        b = Genome((1,) * 8, max_len=8)
        child_a, _ = two_point_crossover(a, b, rng)
        ones = [k for k, c in enumerate(child_a.codes) if c == 1]
        if ones:
            assert ones == list(range(ones[0], ones[-1] + 1))

    def test_crossover_sometimes_cuts_interior(self):
        rng = np.random.default_rng(2)
        a = Genome((0,) * 6, max_len=6)
        b = Genome((1,) * 6, max_len=6)
        seen_mixed = False
        for _ in range(50):
            child_a, _ = two_point_crossover(a, b, rng)
            if 0 < sum(child_a.codes) < 6:
                seen_mixed = True
        assert seen_mixed

    def test_crossover_deterministic_under_seed(self):
        a = random_vector(np.random.default_rng(3), 10)
        b = random_vector(np.random.default_rng(4), 10)
        out1 = two_point_crossover(a, b, np.random.default_rng(5))
        out2 = two_point_crossover(a, b, np.random.default_rng(5))
        assert out1 == out2

    def test_crossover_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="equal-length"):
            two_point_crossover(Genome((1, 0)), Genome((1, 2, 0)), np.random.default_rng(0))

    def test_mutation_prob_zero_is_identity(self):
        g = random_vector(np.random.default_rng(6), 12)
        assert polynomial_mutation_int(g, np.random.default_rng(7), 20.0, 0.0) == g

    def test_mutation_keeps_codes_in_range(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            g = polynomial_mutation_int(random_vector(rng, 10), rng, 20.0, 1.0)
            assert all(0 <= c <= 3 for c in g.codes)
            assert len(g.codes) == 10

    def test_mutation_moves_are_small_and_rare(self):
        """eta 20 keeps ~98% of genes and steps to neighbors otherwise."""
        rng = np.random.default_rng(9)
        counts = Counter()
        for _ in range(10_000):
            counts[polynomial_mutation_int(Genome((1,), max_len=1), rng, 20.0, 1.0).codes[0]] += 1
        assert counts[1] > 9500
        assert counts[0] >= 30
        assert counts[2] >= 30
        assert counts[3] <= 20

    def test_mutation_from_boundary_moves_inward(self):
        rng = np.random.default_rng(10)
        for _ in range(2000):
            g = polynomial_mutation_int(Genome((0,), max_len=1), rng, 20.0, 1.0)
            assert g.codes[0] >= 0


class TestSorting:
    def test_dominance_maximizes(self):
        assert dominates((2.0, 2.0), (1.0, 2.0))
        assert not dominates((1.0, 2.0), (2.0, 1.0))
        assert not dominates((1.0, 1.0), (1.0, 1.0))

    def test_documented_two_objective_example(self):
        fronts = non_dominated_sort([(1.0, 2.0), (2.0, 1.0), (0.0, 0.0)])
        assert fronts == [[0, 1], [2]]

    def test_single_objective_groups_equal_values(self):
        fronts = non_dominated_sort([(3.0,), (1.0,), (3.0,), (2.0,)])
        assert fronts == [[0, 2], [3], [1]]

    def test_crowding_boundaries_are_infinite(self):
        dist = crowding_distance([(1.0,), (2.0,), (4.0,)])
        assert dist[0] == np.inf
        assert dist[2] == np.inf
        assert dist[1] == pytest.approx((4.0 - 1.0) / 3.0)

    def test_crowding_tiny_fronts_are_all_infinite(self):
        assert np.all(np.isinf(crowding_distance([(1.0,)])))
        assert np.all(np.isinf(crowding_distance([(1.0,), (2.0,)])))

    def test_crowding_constant_objective_keeps_zeros(self):
        dist = crowding_distance([(1.0,), (1.0,), (1.0,)])
        assert dist[0] == np.inf and dist[2] == np.inf
        assert dist[1] == 0.0


class TestDuplicates:
    def test_duplicates_are_replaced(self):
        rng = np.random.default_rng(11)
        pop = [
            Individual(Genome((1, 0, 2, 3), max_len=4)),
            Individual(Genome((1, 0, 0, 0), max_len=4)),  # same normal form
            Individual(Genome((2, 1, 0, 3), max_len=4)),
        ]
        out = eliminate_duplicates(pop, rng)
        assert len(out) == 3
        forms = {ind.key for ind in out}
        assert len(forms) == 3
        assert out[0] is pop[0]
        assert out[1] is pop[2]

    def test_taken_keys_are_excluded(self):
        rng = np.random.default_rng(12)
        pop = [Individual(Genome((1, 0, 2), max_len=3))]
        out = eliminate_duplicates(pop, rng, taken={normal_form(Genome((1, 0, 2), max_len=3))})
        assert len(out) == 1
        assert out[0].key != (1, 0)

    def test_tiny_space_terminates_with_repeats(self):
        """max_len 1 has a single architecture, so repeats must be allowed."""
        rng = np.random.default_rng(13)
        pop = [Individual(Genome((c,), max_len=1)) for c in (0, 1)]
        out = eliminate_duplicates(pop, rng)
        assert len(out) == 2

    def test_individuals_are_immutable(self):
        ind = Individual(Genome((1, 0)))
        with pytest.raises(dataclasses.FrozenInstanceError):
            ind.fitness = 1.0


class TestEvaluate:
    def test_deterministic_and_recorded(self):
        ind = Individual(random_vector(np.random.default_rng(14), FAST.max_len))
        out1 = evaluate(ind, CARTPOLE_SPEC, FAST_EPISODES, FAST, generation=0, slot=2)
        out2 = evaluate(ind, CARTPOLE_SPEC, FAST_EPISODES, FAST, generation=0, slot=2)
        assert out1.fitness == out2.fitness
        assert out1.eval_seed == out2.eval_seed
        assert out1.eval_episodes == evaluation_episodes(FAST, FAST_EPISODES) == 3
        assert out1.genome == ind.genome

    def test_slot_changes_the_seed(self):
        ind = Individual(random_vector(np.random.default_rng(15), FAST.max_len))
        a = evaluate(ind, CARTPOLE_SPEC, FAST_EPISODES, FAST, generation=0, slot=0)
        b = evaluate(ind, CARTPOLE_SPEC, FAST_EPISODES, FAST, generation=0, slot=1)
        assert a.eval_seed != b.eval_seed

    def test_fitness_reproducible_from_recorded_seed(self):
        """A report entry can be replayed by training with its eval seed."""
        from eqas.genome import decode
        from eqas.training import config_for, fitness, train

        ind = Individual(random_vector(np.random.default_rng(16), FAST.max_len))
        out = evaluate(ind, CARTPOLE_SPEC, FAST_EPISODES, FAST, generation=1, slot=0)
        cfg = config_for(CARTPOLE_SPEC, episodes=out.eval_episodes, seed=out.eval_seed)
        arch = decode(ind.genome, CARTPOLE_SPEC.state_dim)
        _, curve = train(arch, CARTPOLE_SPEC, cfg)
        assert fitness(curve) == out.fitness

    def test_failed_evaluation_gets_penalty_fitness(self, monkeypatch):
        import eqas.search as search_mod

        def boom(*args, **kwargs):
            raise ValueError("forced failure")

        monkeypatch.setattr(search_mod, "train", boom)
        score = evaluate_genome((1, 0), 2, "CartPole-v1", 3, 123)
        assert score == CARTPOLE_SPEC.min_return


@pytest.fixture(scope="module")
def initial_pop():
    report = run_search(
        dataclasses.replace(FAST, generations=0), CARTPOLE_SPEC, FAST_EPISODES
    )
    return report.generations[0]


@pytest.fixture(scope="module")
def report():
    return run_search(FAST, CARTPOLE_SPEC, FAST_EPISODES)


class TestGeneration:
    def test_initial_population_is_distinct_and_evaluated(self, initial_pop):
        assert len(initial_pop) == FAST.pop_size
        assert len({ind.key for ind in initial_pop}) == FAST.pop_size
        assert all(ind.fitness is not None for ind in initial_pop)

    def test_generation_keeps_size_distinctness_and_elitism(self, initial_pop):
        pop = initial_pop
        best = max(ind.fitness for ind in pop)
        for generation in (1, 2):
            pop = nsga2_generation(pop, FAST, CARTPOLE_SPEC, FAST_EPISODES, generation)
            assert len(pop) == FAST.pop_size
            assert len({ind.key for ind in pop}) == FAST.pop_size
            assert all(ind.fitness is not None for ind in pop)
            new_best = max(ind.fitness for ind in pop)
            assert new_best >= best
            best = new_best

    def test_generation_is_deterministic(self, initial_pop):
        a = nsga2_generation(initial_pop, FAST, CARTPOLE_SPEC, FAST_EPISODES, 1)
        b = nsga2_generation(initial_pop, FAST, CARTPOLE_SPEC, FAST_EPISODES, 1)
        assert a == b

    def test_generation_requires_evaluated_parents(self):
        pop = [Individual(random_vector(np.random.default_rng(17), FAST.max_len))] * FAST.pop_size
        with pytest.raises(ValueError, match="evaluated"):
            nsga2_generation(pop, FAST, CARTPOLE_SPEC, FAST_EPISODES, 1)


class TestRunSearch:
    def test_history_covers_all_generations(self, report):
        assert len(report.generations) == FAST.generations + 1
        for gen in report.generations:
            assert len(gen) == FAST.pop_size

    def test_best_is_the_maximum_seen(self, report):
        scores = [ind.fitness for gen in report.generations for ind in gen]
        assert report.best.fitness == max(scores)

    def test_repeat_run_is_identical(self, report):
        again = run_search(FAST, CARTPOLE_SPEC, FAST_EPISODES)
        assert again.to_json() == report.to_json()

    def test_worker_count_does_not_change_results(self, report):
        parallel = run_search(
            dataclasses.replace(FAST, workers=2), CARTPOLE_SPEC, FAST_EPISODES
        )
        assert parallel.to_json() == report.to_json()

    def test_json_roundtrip(self, report):
        back = SearchReport.from_json(report.to_json())
        assert back.to_json() == report.to_json()
        assert back.best.fitness == report.best.fitness
        assert back.generations[0][0].genome == report.generations[0][0].genome

    def test_csv_layout(self, report, tmp_path):
        path = tmp_path / "generations.csv"
        report.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "generation,slot,genome,fitness"
        assert len(lines) == 1 + (FAST.generations + 1) * FAST.pop_size
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "0"
        assert float(first[3]) == report.generations[0][0].fitness

    def test_progress_callback_sees_every_generation(self):
        seen = []
        run_search(
            dataclasses.replace(FAST, generations=1),
            CARTPOLE_SPEC,
            FAST_EPISODES,
            on_generation=lambda g, pop: seen.append((g, len(pop))),
        )
        assert seen == [(0, FAST.pop_size), (1, FAST.pop_size)]


class TestBestOf:
    def test_ties_go_to_earliest(self):
        pop = [
            Individual(Genome((1, 0)), fitness=5.0),
            Individual(Genome((2, 0)), fitness=7.0),
            Individual(Genome((3, 0)), fitness=7.0),
        ]
        assert best_of(pop) is pop[1]


class TestConfigValidation:
    @pytest.mark.parametrize("bad", [
        dict(pop_size=1), dict(generations=-1), dict(max_len=0),
        dict(episode_factor=0.0), dict(episode_factor=1.5),
        dict(crossover_prob=1.1), dict(mutation_prob=-0.1),
        dict(mutation_eta=0.0), dict(workers=0),
    ])
    def test_rejects_bad_values(self, bad):
        with pytest.raises(ValueError):
            SearchConfig(**bad)

    def test_default_gene_mutation_prob(self):
        assert SearchConfig(max_len=25).gene_mutation_prob == pytest.approx(0.04)
        assert SearchConfig(mutation_prob=0.5).gene_mutation_prob == 0.5
