"""Command-line interface.

Commands: search (evolve architectures), train (train one genome), baseline
(print the hand-designed layered genome), report (summarize a search
report), decode (show what a genome expands to). Option values resolve in
the order CLI flag, then EQAS_* environment variable, then config file
entry, then built-in default. The config file is INI-style with [run],
[search] and [train] sections.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import op_frequency, smooth, top_architectures
from .envs import SPECS, spec_for
from .genome import alternating_baseline, decode, parse_genome, param_shape
from .policy import EnvObservables, save_checkpoint
from .quantum import ControlledZ
from .search import SearchConfig, SearchReport, best_of, run_search
from .training import config_for, fitness, train

DEFAULT_ENV = "CartPole-v1"

_BOOL_STATES = {
    "1": True, "yes": True, "true": True, "on": True,
    "0": False, "no": False, "false": False, "off": False,
}


class _Settings:
    """Layered option lookup: flags, then EQAS_* vars, then config file."""

    def __init__(self, config_path: str | None):
        self.file = configparser.ConfigParser()
        if config_path is not None:
            if not Path(config_path).is_file():
                raise ValueError(f"config file not found: {config_path}")
            self.file.read(config_path)

    def _cast(self, raw: str, cast, field: str, source: str):
        if cast is bool:
            state = _BOOL_STATES.get(raw.strip().lower())
            if state is None:
                raise ValueError(f"invalid value for {field} ({source}): {raw!r} is not a boolean")
            return state
        try:
            return cast(raw)
        except ValueError:
            kind = "an integer" if cast is int else "a number"
            raise ValueError(
                f"invalid value for {field} ({source}): {raw!r} is not {kind}"
            ) from None

    def get(self, flag_value, env_suffix: str | None, section: str, key: str, default, cast):
        if flag_value is not None:
            return flag_value
        if env_suffix is not None:
            raw = os.environ.get(f"EQAS_{env_suffix}")
            if raw is not None:
                return self._cast(raw, cast, key, f"from EQAS_{env_suffix}")
        if self.file.has_option(section, key):
            return self._cast(self.file.get(section, key), cast, f"{section}.{key}", "config file")
        return default


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n")


def _common_settings(args) -> _Settings:
    return _Settings(getattr(args, "config", None))


def cmd_search(args) -> int:
    settings = _common_settings(args)
    env_name = settings.get(args.env, "ENV", "run", "environment", DEFAULT_ENV, str)
    spec = spec_for(env_name)
    cfg = SearchConfig(
        pop_size=settings.get(args.pop_size, None, "search", "pop_size", 20, int),
        generations=settings.get(args.generations, None, "search", "generations", 20, int),
        max_len=settings.get(args.max_len, None, "search", "max_len", 30, int),
        episode_factor=settings.get(args.episode_factor, None, "search", "episode_factor", 0.8, float),
        crossover_prob=settings.get(args.crossover_prob, None, "search", "crossover_prob", 0.9, float),
        mutation_prob=settings.get(args.mutation_prob, None, "search", "mutation_prob", None, float),
        mutation_eta=settings.get(args.mutation_eta, None, "search", "mutation_eta", 20.0, float),
        seed=settings.get(args.seed, "SEED", "run", "seed", 0, int),
        workers=settings.get(args.workers, "WORKERS", "run", "workers", 1, int),
    )
    base_episodes = settings.get(args.episodes, "EPISODES", "search", "base_episodes", spec.base_episodes, int)
    out = _out_dir(settings.get(args.out, "OUT", "run", "out", ".", str))

    def progress(generation: int, population) -> None:
        best = best_of(population)
        mean = float(np.mean([ind.fitness for ind in population]))
        print(f"generation {generation}: best={best.fitness:.2f} mean={mean:.2f}")

    report = run_search(cfg, spec, base_episodes, on_generation=progress)
    report.write_json(out / "report.json")
    report.write_csv(out / "generations.csv")
    print(f"best genome: {report.best.genome}")
    print(f"best fitness: {report.best.fitness:.2f}")
    print(f"report written to {out / 'report.json'}")
    return 0


def cmd_train(args) -> int:
    settings = _common_settings(args)
    env_name = settings.get(args.env, "ENV", "run", "environment", DEFAULT_ENV, str)
    spec = spec_for(env_name)
    genome = parse_genome(args.genome)
    arch = decode(genome, spec.state_dim)
    episodes = settings.get(args.episodes, "EPISODES", "train", "episodes", spec.base_episodes, int)
    trials = settings.get(args.trials, "TRIALS", "train", "trials", 1, int)
    seed = settings.get(args.seed, "SEED", "run", "seed", 0, int)
    out = _out_dir(settings.get(args.out, "OUT", "run", "out", ".", str))
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    overrides = {}
    for key, cast, flag in (
        ("batch_size", int, args.batch_size), ("lr_theta", float, None),
        ("lr_lambda", float, None), ("lr_weights", float, None),
        ("gamma", float, None), ("use_baseline", bool, None),
        ("beta", float, None), ("preprocess", str, None),
        ("optimizer", str, args.optimizer),
    ):
        value = settings.get(flag, None, "train", key, None, cast)
        if value is not None:
            overrides[key] = value

    curves = []
    for trial in range(trials):
        cfg = config_for(spec, episodes=episodes, seed=seed + trial, **overrides)
        params, curve = train(arch, spec, cfg)
        curves.append(curve)
        _write_lines(
            out / f"trial_{trial:02d}.csv",
            ["episode,reward"] + [f"{ep},{float(r)!r}" for ep, r in enumerate(curve)],
        )
        save_checkpoint(
            out / f"trial_{trial:02d}.json", spec.name, genome, params,
            EnvObservables(spec.observables),
        )
        tail = curve[-min(50, len(curve)):]
        print(
            f"trial {trial}: mean={fitness(curve):.2f} "
            f"final_{len(tail)}_mean={float(np.mean(tail)):.2f}"
        )
    stacked = np.stack(curves)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    _write_lines(
        out / "summary.csv",
        ["episode,mean,std"]
        + [f"{ep},{float(m)!r},{float(s)!r}" for ep, (m, s) in enumerate(zip(mean, std))],
    )
    print(f"curves written to {out}")
    return 0


def cmd_baseline(args) -> int:
    settings = _common_settings(args)
    depth = settings.get(args.depth, "DEPTH", "run", "depth", 6, int)
    env_name = settings.get(args.env, "ENV", "run", "environment", DEFAULT_ENV, str)
    spec = spec_for(env_name)
    genome = alternating_baseline(depth)
    arch = decode(genome, spec.state_dim)
    shape = param_shape(arch, spec.n_actions)
    print(str(genome))
    print(
        f"# depth {depth} on {spec.name}: {arch.n_qubits} qubits, "
        f"{len(arch.gates)} gates, theta={shape.n_theta} "
        f"lambda={shape.n_lambda} weights={shape.n_weights}",
        file=sys.stderr,
    )
    return 0


def cmd_report(args) -> int:
    settings = _common_settings(args)
    top_k = settings.get(args.top_k, "TOP_K", "run", "top_k", 10, int)
    window = settings.get(args.window, None, "run", "window", 10, int)
    out = _out_dir(settings.get(args.out, "OUT", "run", "out", ".", str))
    path = Path(args.report)
    if not path.is_file():
        raise ValueError(f"report file not found: {path}")
    report = SearchReport.from_json(path.read_text())

    entries = [
        (ind.genome, ind.fitness)
        for gen in report.generations
        for ind in gen
    ]
    top = top_architectures(entries, top_k)
    if len(top) < top_k:
        print(f"note: only {len(top)} distinct architectures in report", file=sys.stderr)
    print(f"top {len(top)} architectures ({report.environment}):")
    for rank, (genome, score) in enumerate(top, start=1):
        print(f"{rank:3d}. fitness={score:.2f} genome={genome}")

    freq = op_frequency([genome for genome, _ in top])
    _write_lines(
        out / "op_frequency.csv",
        ["position,p_measure,p_variational,p_encoding,p_entangle"]
        + [
            f"{pos},{row[0]!r},{row[1]!r},{row[2]!r},{row[3]!r}"
            for pos, row in enumerate(freq.tolist())
        ],
    )
    best_curve = [best_of(gen).fitness for gen in report.generations]
    mean_curve = [float(np.mean([ind.fitness for ind in gen])) for gen in report.generations]
    best_s = smooth(best_curve, window)
    mean_s = smooth(mean_curve, window)
    _write_lines(
        out / "fitness_curve.csv",
        ["generation,best,mean,best_smoothed,mean_smoothed"]
        + [
            f"{g},{float(b)!r},{float(m)!r},{float(bs)!r},{float(ms)!r}"
            for g, (b, m, bs, ms) in enumerate(zip(best_curve, mean_curve, best_s, mean_s))
        ],
    )
    print(f"tables written to {out}")
    return 0


def cmd_decode(args) -> int:
    settings = _common_settings(args)
    env_name = settings.get(args.env, "ENV", "run", "environment", DEFAULT_ENV, str)
    spec = spec_for(env_name)
    n_qubits = args.qubits if args.qubits is not None else spec.state_dim
    n_actions = args.actions if args.actions is not None else spec.n_actions
    genome = parse_genome(args.genome)
    arch = decode(genome, n_qubits)
    shape = param_shape(arch, n_actions)
    n_cz = sum(1 for g in arch.gates if isinstance(g, ControlledZ))
    block_names = [b.name.lower() for b in arch.blocks]
    print(f"genome: {genome}")
    print(f"blocks: {', '.join(block_names) if block_names else '(none)'} + terminal measurement")
    print(f"qubits: {arch.n_qubits}")
    print(f"gates: {len(arch.gates)} ({len(arch.gates) - n_cz} rotations, {n_cz} controlled-Z)")
    print(f"params: theta={shape.n_theta} lambda={shape.n_lambda} weights={shape.n_weights}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqas",
        description="Evolutionary search over quantum-circuit policies for classic control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    envs = sorted(SPECS)

    def add_common(p, config=True):
        p.add_argument("--env", choices=envs, help=f"environment id (default {DEFAULT_ENV})")
        p.add_argument("--seed", type=int, help="root random seed (default 0)")
        p.add_argument("--out", help="output directory (default current directory)")
        if config:
            p.add_argument("--config", help="INI config file with [run]/[search]/[train] sections")

    p = sub.add_parser("search", help="run the evolutionary architecture search")
    add_common(p)
    p.add_argument("--workers", type=int, help="parallel evaluation processes (default 1)")
    p.add_argument("--episodes", type=int, help="base per-candidate episode budget")
    p.add_argument("--pop-size", dest="pop_size", type=int, help="population size (default 20)")
    p.add_argument("--generations", type=int, help="number of generations (default 20)")
    p.add_argument("--max-len", dest="max_len", type=int, help="genome length (default 30)")
    p.add_argument("--episode-factor", dest="episode_factor", type=float,
                   help="fraction of the base budget used per evaluation (default 0.8)")
    p.add_argument("--crossover-prob", dest="crossover_prob", type=float,
                   help="crossover probability (default 0.9)")
    p.add_argument("--mutation-prob", dest="mutation_prob", type=float,
                   help="per-gene mutation probability (default 1/max_len)")
    p.add_argument("--mutation-eta", dest="mutation_eta", type=float,
                   help="polynomial mutation distribution index (default 20)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("train", help="train a policy for one genome")
    p.add_argument("genome", help="dash-separated genome string, e.g. 1-2-3-0")
    add_common(p)
    p.add_argument("--episodes", type=int, help="training episodes (default per environment)")
    p.add_argument("--trials", type=int, help="independent repetitions (default 1)")
    p.add_argument("--optimizer", choices=("adam", "sgd"),
                   help="ascent step rule (default adam)")
    p.add_argument("--batch-size", dest="batch_size", type=int,
                   help="episodes per policy update (default 10)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("baseline", help="print the hand-designed layered genome")
    add_common(p)
    p.add_argument("--depth", type=int, help="number of layer repetitions (default 6)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", help="summarize a search report")
    p.add_argument("report", help="path to a report.json written by search")
    add_common(p)
    p.add_argument("--top-k", dest="top_k", type=int, help="architectures to keep (default 10)")
    p.add_argument("--window", type=int, help="moving-average window (default 10)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("decode", help="show blocks, gates and parameter shape of a genome")
    p.add_argument("genome", help="dash-separated genome string")
    add_common(p)
    p.add_argument("--qubits", type=int, help="qubit count (default: environment state size)")
    p.add_argument("--actions", type=int, help="action count (default: environment's)")
    p.set_defaults(func=cmd_decode)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, IndexError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
