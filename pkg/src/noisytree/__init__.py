"""Search on trees with permanently noisy advice.

Submodules: ``treekit`` (trees, generators, separators), ``noise`` (advice
models and sampling), ``walkers`` (move-efficient searchers), ``queriers``
(query-efficient searchers), ``memoryless`` (probabilistic following),
``oracle`` (exact enumeration and analytic checks), ``harness`` (Monte-Carlo
engine) and ``cli``.
"""
from .errors import (BudgetExceeded, EnumerationCapExceeded, HypothesisViolated, InvalidSpec,
                     MissingAdversary, MissingAdvice, NoisyTreeError, StepCapExceeded, TreeFormatError)
from .harness import ExperimentSpec, ResultRow, run, sweep, verify_threshold
from .memoryless import PFConfig, probabilistic_following
from .noise import AdviceAssignment, NoiseModel, enumerate_advice, sample_advice
from .oracle import exact_expected_cost
from .queriers import a_loop, a_sep, a_two_layers
from .treekit import CompleteTree, TreeTopology, generate
from .walkers import LazyAdvice, a_natural, a_walk, a_walk_uniform_theta

__version__ = "0.1.0"

__all__ = [
    "AdviceAssignment", "BudgetExceeded", "CompleteTree", "EnumerationCapExceeded", "ExperimentSpec",
    "HypothesisViolated", "InvalidSpec", "LazyAdvice", "MissingAdversary", "MissingAdvice",
    "NoiseModel", "NoisyTreeError", "PFConfig", "ResultRow", "StepCapExceeded", "TreeFormatError",
    "TreeTopology", "a_loop", "a_natural", "a_sep", "a_two_layers", "a_walk", "a_walk_uniform_theta",
    "enumerate_advice", "exact_expected_cost", "generate", "probabilistic_following", "run",
    "sample_advice", "sweep", "verify_threshold",
]
