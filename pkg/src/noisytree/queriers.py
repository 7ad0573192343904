"""Query-counting searchers on a fully known tree.

A separator strand descends the fixed centroid decomposition.  At each
separator ``u`` it inspects the ball T_h(u) inside the current component and
runs a local search there (A_walk for A_sep and A_fast, the level loop for
A_mid) until it queries τ or a promising nominee, whose side of ``u`` becomes
the next component.  Strands are interleaved round-robin with an exhaustive
breadth-first scan, which bounds the total at a constant times the cheapest
strand.  Re-querying a node the same strand already saw is free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .errors import MissingAdvice
from .noise import EPS_DEFAULT, AdviceAssignment
from .treekit import SeparatorTree, TreeTopology, centroid_decomposition

TREASURE = "treasure"
COMPONENT = "component"
EXHAUSTED = "exhausted"


def h_for(n: int, eps: float) -> int:
    """Ball radius ⌈-3 log(2n) / log(1-ε)⌉."""
    return max(1, math.ceil(-3.0 * math.log(2 * n) / math.log(1.0 - eps)))


def kappa_default(eps: float) -> int:
    return math.ceil(3.0 / -math.log(1.0 - eps))


def two_layer_radii(n: int, kappa1: float, kappa2: float) -> tuple[int, int]:
    """(h₁, h₂) = (⌈κ₁ log n⌉, ⌈κ₂ log log n⌉), each at least 1."""
    ln = math.log(max(n, 2))
    h1 = max(1, math.ceil(kappa1 * ln))
    h2 = max(1, math.ceil(kappa2 * math.log(ln))) if ln > 1 else 1
    return h1, h2


def _log_delta(t: TreeTopology) -> float:
    return math.log(max(int(t.degree.max()), 2))


@dataclass(frozen=True, eq=False)
class LocalBall:
    """T_h(u) inside a component, in local BFS order (local id 0 = u)."""

    center: int
    h: int
    weighted: bool
    glob: np.ndarray
    lparent: np.ndarray
    ldepth: np.ndarray
    log_beta: np.ndarray
    child_start: np.ndarray
    nominee: np.ndarray
    psi_log: np.ndarray
    psi_count: np.ndarray
    log_delta: float

    @property
    def size(self) -> int:
        return int(self.glob.size)

    def nominees(self) -> np.ndarray:
        return self.glob[self.nominee]

    def threshold(self) -> float:
        return (2.0 / 3.0) * self.h * (self.log_delta if self.weighted else 1.0)

    def promising_mask(self) -> np.ndarray:
        psi = self.psi_log if self.weighted else self.psi_count
        return self.nominee & (psi >= self.threshold() - K.TIE_TOL)

    def side_of(self, local: int) -> int:
        """Neighbor of the center through which ``local`` is reached."""
        while self.ldepth[local] > 1:
            local = self.lparent[local]
        return int(self.glob[local])


def local_ball(t: TreeTopology, adv: AdviceAssignment, u: int, h: int, weighted: bool,
               domain: np.ndarray | None = None) -> LocalBall:
    dom = np.ones(t.n, dtype=np.bool_) if domain is None else np.asarray(domain, dtype=np.bool_)
    ld = _log_delta(t)
    glob, lpar, ldep, llb, lcs, nom, pw, pc = K.build_ball(
        t.parent, t.cptr, t.cidx, t.degree, int(u), int(h), bool(weighted), ld, dom, adv.pointer)
    return LocalBall(int(u), int(h), bool(weighted), glob, lpar, ldep, llb, lcs, nom, pw, pc, ld)


def promising(t: TreeTopology, adv: AdviceAssignment, u: int, v: int, h: int,
              weighted: bool) -> bool:
    """Signed arrow sum over [u, v⟩ against the (2/3)-threshold."""
    if u == v:
        return 0.0 >= (2.0 / 3.0) * h * (_log_delta(t) if weighted else 1.0) - K.TIE_TOL
    w_prev, total = None, 0.0
    x = u
    while x != v:
        a = adv[x]
        if a < 0:
            raise MissingAdvice(f"no advice at {x}")
        nxt = t.next_hop(x, v)
        wt = math.log(t.degree[x]) if weighted else 1.0
        if a == nxt:
            total += wt
        elif w_prev is not None and a == w_prev:
            total -= wt
        w_prev, x = x, nxt
    thr = (2.0 / 3.0) * h * (_log_delta(t) if weighted else 1.0)
    return total >= thr - K.TIE_TOL


@dataclass(frozen=True)
class Verdict:
    kind: str
    component: int | None  # neighbor of the center on the chosen side
    order: tuple[int, ...]  # nodes queried by the local search, in order
    nominee: int | None = None


def _local_search(ball: LocalBall, tau: int, searcher: str) -> Verdict:
    m = ball.size
    stop = ball.promising_mask() | (ball.glob == tau)
    cidx = np.arange(m, dtype=np.int64)
    buf = np.empty(m, dtype=np.int64)
    if searcher == "walk":
        key = ball.psi_log - (2.0 / 3.0) * ball.log_beta
        cnt, stopped = K.best_first_static(ball.child_start, cidx, key, ball.glob, stop, m + 1, buf)
    else:
        key = ball.psi_count.astype(np.float64)
        cnt, stopped = K.loop_static(ball.child_start, cidx, ball.ldepth, key, ball.glob, stop, m + 1, buf)
    order = tuple(int(x) for x in ball.glob[buf[:cnt]])
    if not stopped:
        return Verdict(EXHAUSTED, None, order)
    last = int(buf[cnt - 1])
    if ball.glob[last] == tau:
        return Verdict(TREASURE, None, order)
    return Verdict(COMPONENT, ball.side_of(last), order, int(ball.glob[last]))


def local(t: TreeTopology, adv: AdviceAssignment, u: int, h: int, weighted: bool,
          domain: np.ndarray | None = None, searcher: str = "walk") -> Verdict:
    """Local search in T_h(u); see :class:`Verdict` for the outcome."""
    return _local_search(local_ball(t, adv, u, h, weighted, domain), t.treasure, searcher)


def exhaustive(t: TreeTopology) -> list[int]:
    """Fixed breadth-first order from σ."""
    return [int(x) for x in t.order]


@dataclass
class Strand:
    seq: list[int]
    found: bool
    exhausted: bool
    phases: list[Verdict] = field(default_factory=list)


@dataclass(frozen=True)
class QueryTranscript:
    queries: int
    visits: tuple[int, ...]
    strand_queries: tuple[int, ...]
    terminal: int
    phases: tuple[Verdict, ...] = ()


def separator_strand(t: TreeTopology, adv: AdviceAssignment, seps: SeparatorTree, h: int,
                     weighted: bool, searcher: str = "walk", budget: int | None = None) -> Strand:
    """Query sequence of the separator descent, cut after ``budget`` queries."""
    tau = t.treasure
    budget = t.n + 1 if budget is None else budget
    seen = np.zeros(t.n, dtype=bool)
    seq: list[int] = []
    phases: list[Verdict] = []
    c = seps.top
    while True:
        v = local(t, adv, c, h, weighted, seps.component_mask(c), searcher)
        phases.append(v)
        for g in v.order:
            if not seen[g]:
                seen[g] = True
                seq.append(g)
                if g == tau:
                    return Strand(seq, True, False, phases)
                if len(seq) >= budget:
                    return Strand(seq, False, False, phases)
        if v.kind != COMPONENT:
            return Strand(seq, False, True, phases)
        c = seps.child_toward(c, v.component)


def _exhaustive_strand(t: TreeTopology) -> Strand:
    seq = exhaustive(t)
    return Strand(seq[: seq.index(t.treasure) + 1], True, False)


def interleave(strands: Sequence[Strand], tau: int) -> tuple[int, list[int], list[int]]:
    """Round-robin until some strand queries τ; exhausted strands drop out."""
    pos = [0] * len(strands)
    visits: list[int] = []
    while True:
        progressed = False
        for i, s in enumerate(strands):
            if pos[i] < len(s.seq):
                g = s.seq[pos[i]]
                pos[i] += 1
                visits.append(g)
                progressed = True
                if g == tau:
                    return len(visits), visits, pos
            elif not s.exhausted and not s.found:
                raise RuntimeError("strand truncated before the interleave finished")
        if not progressed:
            raise RuntimeError("no strand reaches the treasure")


def _pos(s: Strand) -> int:
    return len(s.seq) if s.found else 10**18


def a_sep(t: TreeTopology, adv: AdviceAssignment, eps: float = EPS_DEFAULT, h: int | None = None,
          weighted: bool = True, seps: SeparatorTree | None = None) -> QueryTranscript:
    """Separator descent with weighted balls, alternated with the BFS scan."""
    h = h_for(t.n, eps) if h is None else h
    seps = centroid_decomposition(t) if seps is None else seps
    ex = _exhaustive_strand(t)
    sep = separator_strand(t, adv, seps, h, weighted, "walk", budget=_pos(ex))
    total, visits, pos = interleave([sep, ex], t.treasure)
    return QueryTranscript(total, tuple(visits), tuple(pos), t.treasure, tuple(sep.phases))


def a_two_layers(t: TreeTopology, adv: AdviceAssignment, kappa1: float | None = None,
                 kappa2: float | None = None, eps: float = EPS_DEFAULT,
                 seps: SeparatorTree | None = None) -> QueryTranscript:
    """Round-robin of A_fast (radius h₂, A_walk), A_mid (radius h₁, level
    loop) and the BFS scan, all with the ±1 promising rule."""
    k = kappa_default(eps)
    h1, h2 = two_layer_radii(t.n, k if kappa1 is None else kappa1, k if kappa2 is None else kappa2)
    seps = centroid_decomposition(t) if seps is None else seps
    ex = _exhaustive_strand(t)
    fast = separator_strand(t, adv, seps, h2, False, "walk", budget=_pos(ex))
    mid = separator_strand(t, adv, seps, h1, False, "loop", budget=min(_pos(ex), _pos(fast)))
    total, visits, pos = interleave([fast, mid, ex], t.treasure)
    return QueryTranscript(total, tuple(visits), tuple(pos), t.treasure,
                           tuple(fast.phases) + tuple(mid.phases))


def a_loop(t: TreeTopology, adv: AdviceAssignment, domain: np.ndarray | None = None) -> QueryTranscript:
    """Level loop on a connected domain; its shallowest node is the start."""
    dom = np.ones(t.n, dtype=bool) if domain is None else np.asarray(domain, dtype=bool)
    nodes = np.flatnonzero(dom)
    root = int(nodes[np.argmin(t.depth[nodes])])
    ball = local_ball(t, adv, root, t.n + 1, False, dom)
    v = _local_search(ball, t.treasure, "loop")
    return QueryTranscript(len(v.order), v.order, (len(v.order),), t.treasure if v.kind == TREASURE else -1)


def is_misleading(t: TreeTopology, adv: AdviceAssignment, u: int, h: int, weighted: bool,
                  domain: np.ndarray | None = None) -> bool:
    """Does the ball around ``u`` hide the treasure side or point elsewhere?"""
    tau = t.treasure
    if u == tau:
        return False
    ball = local_ball(t, adv, u, h, weighted, domain)
    where = {int(g): i for i, g in enumerate(ball.glob)}
    if tau in where:
        leaf = where[tau]
    else:
        # last ball node on the way from u toward τ
        x, leaf = u, 0
        while x != tau:
            x = t.next_hop(x, tau)
            if x not in where:
                break
            leaf = where[x]
        prom = ball.promising_mask()
        if not prom[leaf]:
            return True
    side = ball.side_of(leaf)
    for i in np.flatnonzero(ball.promising_mask()):
        if ball.side_of(int(i)) != side:
            return True
    return False


def misleading_root_rate(t, model, h: int, weighted: bool, seeds: np.ndarray) -> np.ndarray:
    """h-misleading indicator at σ for each trial seed (lazy advice, any tree)."""
    out = np.zeros(seeds.size, dtype=np.bool_)
    if isinstance(t, TreeTopology):
        ld = _log_delta(t)
    else:
        ld = math.log(max(t.root_children, t.branching + 1 if t.depth >= 2 else 1, 2))
    K.misleading_trials(t.kernel_view(), model.kernel_env(t), seeds, int(h), bool(weighted), ld, out)
    return out
