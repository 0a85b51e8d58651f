"""Kernel SVM training with stochastic conjugate subgradients."""

from .baselines import pegasos, wolfe_deterministic
from .dataset import Dataset, DataError, load, split, standardize
from .harness import ExperimentSpec, gen_synthetic, run
from .kernel import GrowingKernel, rbf_matrix
from .objective import SampledObjective, eval_full
from .solver import ConfigError, SolverConfig, min_sample_size, solve

__all__ = ["Dataset", "DataError", "load", "split", "standardize", "GrowingKernel",
           "rbf_matrix", "SampledObjective", "eval_full", "ConfigError", "SolverConfig",
           "min_sample_size", "solve", "pegasos", "wolfe_deterministic", "ExperimentSpec",
           "gen_synthetic", "run"]
__version__ = "0.1.0"
