"""Probabilistic following: a memoryless walker that trusts advice with
probability λ and otherwise steps to a uniform neighbor."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import _kernels as K
from ._rng import derive, trial_seeds
from .errors import StepCapExceeded
from .noise import AdviceAssignment, NoiseModel
from .treekit import CompleteTree, TreeTopology
from .walkers import LazyAdvice, _env

Tree = Union[TreeTopology, CompleteTree]
WALK_STREAM = 0x5046  # sub-stream index of the walk randomness within a trial


@dataclass(frozen=True)
class PFConfig:
    """Listening probability and step cap.

    λ is accepted on the closed interval: λ=1 (pure following) and λ=0
    (simple random walk) are useful limits.
    """

    lam: float = 0.75
    cap: int = 10**9

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("λ must lie in [0, 1]")
        if self.cap < 1:
            raise ValueError("step cap must be positive")


def walk_seed(trial_seed: int) -> int:
    return int(derive(np.uint64(trial_seed), WALK_STREAM))


def probabilistic_following(t: Tree, adv: AdviceAssignment | LazyAdvice, cfg: PFConfig,
                            seed: int) -> int:
    """Steps from σ until τ is reached; raises StepCapExceeded at the cap.

    ``seed`` drives the walker's own coin flips (one uniform per step).
    """
    env, aseed = _env(t, adv)
    steps = K.pf_walk(t.kernel_view(), env, aseed, np.uint64(seed), float(cfg.lam), int(cfg.cap))
    if steps < 0:
        raise StepCapExceeded(cfg.cap)
    return int(steps)


def pf_batch(t: Tree, model: NoiseModel, cfg: PFConfig, root_seed: int, trials: int,
             offset: int = 0) -> np.ndarray:
    """Steps per trial, -1 marking censored runs."""
    seeds = trial_seeds(root_seed, trials, offset)
    wseeds = np.array([walk_seed(int(s)) for s in seeds], dtype=np.uint64)
    out = np.empty(trials, dtype=np.int64)
    K.pf_trials(t.kernel_view(), model.kernel_env(t), seeds, wseeds, float(cfg.lam), int(cfg.cap), out)
    return out


@dataclass
class GrowthEstimate:
    """Least-squares slope of log(mean steps) against depth."""

    slope: float
    depths: list[int]
    means: list[float]
    censored: list[float]
    restricted_means: list[float] = field(default_factory=list)

    @property
    def factor(self) -> float:
        return math.exp(self.slope)


def fit_log_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def pf_hitting_growth(family: Callable[[int], Tree], model: NoiseModel, lam: float,
                      depths: Sequence[int], trials: int = 200, seed: int = 0,
                      cap: int = 10**7) -> GrowthEstimate:
    """Fit log(mean steps) vs depth over a tree family.

    Means are over uncensored trials; the censored fraction per depth is
    reported alongside, together with the mean of min(steps, cap), a lower
    bound on the true mean that is used for the fit whenever censoring occurs.
    """
    cfg = PFConfig(lam, cap)
    means, cens, rmeans = [], [], []
    for i, d in enumerate(depths):
        out = pf_batch(family(d), model, cfg, int(derive(np.uint64(seed), i)), trials)
        ok = out[out >= 0]
        cens.append(float(np.mean(out < 0)))
        means.append(float(ok.mean()) if ok.size else float("nan"))
        rmeans.append(float(np.where(out < 0, cap, out).mean()))
    use = rmeans if any(c > 0 for c in cens) else means
    slope = fit_log_slope(depths, [max(u, 1e-300) for u in use]) if len(depths) > 1 else float("nan")
    return GrowthEstimate(slope, list(depths), means, cens, rmeans)
