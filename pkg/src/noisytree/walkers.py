"""Walking searchers: A_walk, the arrow-count baseline and the uniform-θ variant.

All three are frontier searches that differ only in how candidates are
ranked.  The compiled kernel uses a static key per candidate (see
``_kernels.walk_search``); :func:`a_walk_reference` recomputes every score
from scratch after each query and serves as the slow cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from . import _kernels as K
from .errors import MissingAdvice
from .noise import AdviceAssignment, NoiseModel
from .treekit import CompleteTree, TreeTopology, path

Tree = Union[TreeTopology, CompleteTree]


@dataclass(frozen=True)
class LazyAdvice:
    """Advice drawn on demand from (model, seed) instead of a stored array."""

    model: NoiseModel
    seed: int


AdviceSource = Union[AdviceAssignment, LazyAdvice]


@dataclass(frozen=True)
class SearchTranscript:
    queries: int
    moves: int
    visits: tuple[int, ...]
    moves_at: tuple[int, ...]
    terminal: int

    def dump(self) -> str:
        """One line per query: ``query node moves_so_far queries_so_far``."""
        return "".join(f"query {v} {m} {i + 1}\n"
                       for i, (v, m) in enumerate(zip(self.visits, self.moves_at)))


def _env(t: Tree, adv: AdviceSource):
    if isinstance(adv, LazyAdvice):
        return adv.model.kernel_env(t), np.uint64(adv.seed)
    if isinstance(t, CompleteTree):
        raise TypeError("implicit trees take LazyAdvice")
    dummy = NoiseModel()
    return dummy.kernel_env(t, ptr=adv.pointer), np.uint64(0)


def _run(t: Tree, adv: AdviceSource, mode: int, record: bool) -> SearchTranscript:
    env, seed = _env(t, adv)
    q, m, vis, mv = K.walk_search(t.kernel_view(), env, seed, mode, record)
    visits = tuple(int(x) for x in vis) if record else ()
    return SearchTranscript(int(q), int(m), visits, tuple(int(x) for x in mv) if record else (),
                            int(t.treasure))


def a_walk(t: Tree, adv: AdviceSource, record: bool = True) -> SearchTranscript:
    """Explore the candidate with highest score until τ is queried."""
    return _run(t, adv, K.MODE_BETA, record)


def a_natural(t: Tree, adv: AdviceSource, record: bool = True) -> SearchTranscript:
    """Baseline ranking candidates by the number of seen arrows pointing to them."""
    return _run(t, adv, K.MODE_COUNT, record)


def a_walk_uniform_theta(t: Tree, adv: AdviceSource, record: bool = True) -> SearchTranscript:
    """A_walk with the uniform-over-leaves prior in place of 1/β."""
    return _run(t, adv, K.MODE_THETA, record)


WALKERS: dict[str, Callable] = {
    "a_walk": a_walk,
    "a_natural": a_natural,
    "a_walk_uniform_theta": a_walk_uniform_theta,
}
WALK_MODES = {"a_walk": K.MODE_BETA, "a_natural": K.MODE_COUNT,
              "a_walk_uniform_theta": K.MODE_THETA}


# direct definitions (slow, used for cross-checks) ------------------------

def points_toward(t: TreeTopology, adv: AdviceAssignment, w: int, target: int) -> bool:
    """Does the advice at ``w`` point toward ``target``?"""
    return w != target and adv[w] == t.next_hop(w, target)


def score(t: TreeTopology, adv: AdviceAssignment, explored: Iterable[int], u: int,
          weight: str = "beta") -> float:
    """(2/3) log(1/β(u)) - Σ_{w explored, advice away from u} log Δ_w.

    ``weight="theta_uniform"`` swaps 1/β(u) for the fraction of leaves below u.
    """
    away = sum(math.log(t.degree[w]) for w in explored
               if w != u and not points_toward(t, adv, w, u))
    if weight == "beta":
        prior = -t.log_beta[u]
    else:
        prior = math.log(t.leafcount[u] / t.leafcount[0])
    return (2.0 / 3.0) * prior - away


def arrow_count(t: TreeTopology, adv: AdviceAssignment, explored: Iterable[int], u: int) -> int:
    return sum(1 for w in explored if w != u and points_toward(t, adv, w, u))


def pairwise_beats(t: TreeTopology, adv: AdviceAssignment, u: int, v: int,
                   known: Iterable[int] | None = None) -> bool:
    """Score comparison restricted to the advice on the open path ⟨u, v⟩.

    ``known`` lists the nodes whose advice has been revealed; every node of
    ⟨u, v⟩ must be among them.
    """
    inner = path(t, u, v, include_start=False, include_end=False).nodes
    if known is not None:
        ks = set(known)
        missing = [w for w in inner if w not in ks]
        if missing:
            raise MissingAdvice(f"advice unknown at {missing}")
    lhs = 0.0
    for w in inner:
        lw = math.log(t.degree[w])
        if points_toward(t, adv, w, u):
            lhs += lw
        elif points_toward(t, adv, w, v):
            lhs -= lw
    rhs = (2.0 / 3.0) * (t.log_beta[u] - t.log_beta[v])
    return lhs > rhs + K.TIE_TOL


class _Probe:
    """Tree proxy that records which nodes' structure or advice was read."""

    def __init__(self, t: TreeTopology, adv: AdviceAssignment):
        self._t, self._adv = t, adv
        self.read: list[int] = []

    def advice(self, u: int) -> int:
        self.read.append(u)
        return self._adv[u]

    def children(self, u: int):
        self.read.append(u)
        return self._t.children(u)


def a_walk_reference(t: TreeTopology, adv: AdviceAssignment, weight: str = "beta",
                     probe: _Probe | None = None) -> SearchTranscript:
    """Quadratic-time A_walk straight from the definition.

    Scores are recomputed from all revealed advice after every query;
    ``weight`` is ``beta``, ``theta_uniform`` or ``count``.  If a probe is
    passed, every structural or advice read goes through it.
    """
    probe = probe or _Probe(t, adv)
    known: dict[int, int] = {0: probe.advice(0)} if t.treasure != 0 else {}
    explored = [0]
    cand = [] if t.treasure == 0 else [int(c) for c in probe.children(0)]
    cur, moves = 0, 0
    visits, moves_at = [0], [0]
    shadow = AdviceAssignment(np.where(np.isin(np.arange(t.n), list(known)), adv.pointer, -1),
                              np.zeros(t.n, bool))
    while t.treasure not in explored:
        def rank(c):
            if weight == "count":
                val = float(arrow_count(t, shadow, known, c))
            else:
                val = score(t, shadow, known, c, weight)
            return (val, -c)
        best = max(cand, key=rank)
        # lowest id among near-ties
        top = rank(best)[0]
        best = min(c for c in cand if abs(rank(c)[0] - top) <= K.TIE_TOL)
        cand.remove(best)
        moves += t.distance(cur, best)
        cur = best
        explored.append(best)
        visits.append(best)
        moves_at.append(moves)
        if best == t.treasure:
            break
        known[best] = probe.advice(best)
        shadow = AdviceAssignment(np.where(np.isin(np.arange(t.n), list(known)), adv.pointer, -1),
                                  np.zeros(t.n, bool))
        cand.extend(int(c) for c in probe.children(best))
    return SearchTranscript(len(explored), moves, tuple(visits), tuple(moves_at), t.treasure)
