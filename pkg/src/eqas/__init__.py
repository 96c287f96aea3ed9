"""Evolutionary architecture search for quantum-circuit policies.

Integer genomes encode layered circuit architectures; each candidate is
decoded, wrapped in a softmax policy over Pauli-Z expectations, trained
with REINFORCE on a classic-control task, and scored by its average
episode reward. A generational NSGA-II loop evolves the genomes.
"""

from .envs import CARTPOLE_SPEC, MOUNTAINCAR_SPEC, EnvSpec, make_env, spec_for
from .genome import (
    Architecture,
    Genome,
    OpCode,
    ParamShape,
    alternating_baseline,
    canonicalize,
    decode,
    param_shape,
    parse_genome,
    random_genome,
    search_space_size,
)
from .policy import EnvObservables, PolicyParams, action_probs, log_prob_grads
from .search import Individual, SearchConfig, SearchReport, run_search
from .training import OptimizerState, TrainConfig, config_for, fitness, train

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "CARTPOLE_SPEC",
    "EnvObservables",
    "EnvSpec",
    "Genome",
    "Individual",
    "MOUNTAINCAR_SPEC",
    "OpCode",
    "OptimizerState",
    "ParamShape",
    "PolicyParams",
    "SearchConfig",
    "SearchReport",
    "TrainConfig",
    "action_probs",
    "alternating_baseline",
    "canonicalize",
    "config_for",
    "decode",
    "fitness",
    "log_prob_grads",
    "make_env",
    "param_shape",
    "parse_genome",
    "random_genome",
    "run_search",
    "search_space_size",
    "spec_for",
    "train",
    "__version__",
]
