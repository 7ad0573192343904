"""Exact ground truth for small instances and the lower-bound counting tools.

Everything here is computed independently of the Monte-Carlo paths: exact
expectations enumerate the advice law with rational arithmetic, and the
probabilistic-following expectations come from first-step recursions rather
than from simulating walks.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels as K
from ._rng import trial_seeds
from .errors import HypothesisViolated, InvalidSpec
from .noise import (DEFAULT_ENUM_CAP, RANDOM, AdviceAssignment, NoiseModel, enumerate_advice,
                    star_cap)
from .treekit import CompleteTree, TreeTopology

DETERMINISTIC = ("a_walk", "a_natural", "a_walk_uniform_theta", "a_loop", "a_sep", "a_two_layers")


def algorithm_cost(t: TreeTopology, adv: AdviceAssignment, algo: str, metric: str, **params):
    """Cost of one deterministic run (or exact quenched expectation for pf)."""
    from . import queriers, walkers
    if algo in walkers.WALKERS:
        tr = walkers.WALKERS[algo](t, adv, record=False)
        return tr.queries if metric == "queries" else tr.moves
    if metric != "queries" and algo != "pf":
        raise InvalidSpec(f"{algo} is a query algorithm; it has no move count")
    if algo == "a_loop":
        return queriers.a_loop(t, adv).queries
    if algo == "a_sep":
        return queriers.a_sep(t, adv, **params).queries
    if algo == "a_two_layers":
        return queriers.a_two_layers(t, adv, **params).queries
    if algo == "pf":
        if metric != "moves":
            raise InvalidSpec("pf is measured in moves")
        return pf_quenched_expected(t, adv, params.get("lam", 0.75))
    raise InvalidSpec(f"no exact cost for algorithm {algo!r}")


def exact_expected_cost(t: TreeTopology, m: NoiseModel, algo: str, metric: str = "queries",
                        cap: int = DEFAULT_ENUM_CAP, **params) -> Fraction:
    """Σ over all advice assignments of probability × cost.

    ``pf`` (probabilistic following) is randomised; its per-assignment cost
    is the exact expected hitting time, so the total is still exact.
    """
    if algo not in DETERMINISTIC and algo != "pf":
        raise InvalidSpec(f"{algo!r} is not a known deterministic algorithm")
    total = Fraction(0)
    for adv, p in enumerate_advice(t, m, cap):
        c = algorithm_cost(t, adv, algo, metric, **params)
        if c is None:
            raise InvalidSpec("expected cost is infinite for some assignment of positive mass")
        total += p * Fraction(c)
    return total


# probabilistic following --------------------------------------------------

def pf_quenched_expected(t: TreeTopology, adv: AdviceAssignment, lam) -> Fraction | None:
    """Exact E[steps] of probabilistic following for fixed advice.

    With the tree rooted at τ, the time g(x) to step from x to its τ-ward
    neighbor satisfies g(x) = (1 + Σ_{y away} P(x→y) g(y)) / P(x→τ-ward).
    Returns None when some needed g is infinite (λ=1 with wrong advice).
    """
    lam = Fraction(repr(float(lam))) if not isinstance(lam, Fraction) else lam
    tau = t.treasure
    if tau == 0:
        return Fraction(0)
    nbr = [t.neighbors(u) for u in range(t.n)]
    up = [-1] * t.n
    order = [tau]
    seen = [False] * t.n
    seen[tau] = True
    dq = deque([tau])
    while dq:
        x = dq.popleft()
        for y in nbr[x]:
            if not seen[y]:
                seen[y] = True
                up[y] = x
                order.append(y)
                dq.append(y)
    g: list[Fraction | None] = [None] * t.n
    for x in reversed(order[1:]):
        deg = len(nbr[x])
        base = (1 - lam) / deg

        def p(y):
            return base + (lam if adv[x] == y else 0)

        num = Fraction(1)
        ok = True
        for y in nbr[x]:
            if y != up[x]:
                if g[y] is None:
                    if p(y) > 0:
                        ok = False
                    continue
                num += p(y) * g[y]
        den = p(up[x])
        g[x] = num / den if ok and den > 0 else None
    total = Fraction(0)
    x = 0
    while x != tau:
        if g[x] is None:
            return None
        total += g[x]
        x = up[x]
    return total


def _pf_node(deg: int, target_law: float, away_laws: Sequence[float], away_G: Sequence[float],
             lam: float) -> float:
    """E over the node's advice of its first-step hitting time to the target."""
    base = (1.0 - lam) / deg
    out = 0.0
    if target_law > 0:
        out += target_law * (1.0 + sum(base * G for G in away_G)) / (lam + base)
    for k, pa in enumerate(away_laws):
        if pa == 0:
            continue
        s = 1.0 + sum((base + (lam if i == k else 0.0)) * G for i, G in enumerate(away_G))
        out += pa * s / base
    return out


def pf_expected_complete(tree: CompleteTree, m: NoiseModel, lam: float) -> float:
    """Exact annealed E[steps] on a complete tree with τ the leftmost node of
    its level, by first-step recursion (off-path subtrees, then the path).

    Needs λ < 1 whenever faults are possible.
    """
    r, b, D = tree.root_children, tree.branching, tree.depth
    d = tree.treasure_depth
    if tree.treasure != int(tree.level_start[d]):
        raise ValueError("the recursion assumes τ is the leftmost node of its level")
    if d == 0:
        return 0.0
    semi = m.mode != RANDOM
    rule = m.adversary

    def qd(deg):
        return float(m.q_for_degree(np.array([deg]))[0]) if m.q_rule else m.q

    # H[k]: off-path node with k levels below it, back to its parent
    H = [1.0]
    for k in range(1, D + 1):
        deg = b + 1
        q = qd(deg)
        if not semi:
            laws = [q / deg] * b
            tl = 1 - q + q / deg
        elif rule == "first_child":
            laws = [q] + [0.0] * (b - 1)
            tl = 1 - q
        else:
            laws, tl = [0.0] * b, 1.0
        H.append(_pf_node(deg, tl, laws, [H[k - 1]] * b, lam))
    U: list[float] = []
    for j in range(d):
        deg = r if j == 0 else b + 1
        nch = r if j == 0 else b
        G = ([U[j - 1]] if j > 0 else []) + [H[D - j - 1]] * (nch - 1)
        q = qd(deg)
        if not semi:
            laws = [q / deg] * len(G)
            tl = 1 - q + q / deg
        elif rule == "root" and j > 0:
            laws = [q] + [0.0] * (len(G) - 1)
            tl = 1 - q
        else:  # adversary picks the first child, which is the path child
            laws, tl = [0.0] * len(G), 1.0
        U.append(_pf_node(deg, tl, laws, G, lam))
    return float(sum(U))


# lower-bound counting -------------------------------------------------------

def _psi_internal(t: TreeTopology, adv: AdviceAssignment) -> np.ndarray:
    return K.psi_count_global(t.parent, t.order, np.ascontiguousarray(adv.pointer))


def arrows_toward_leaves(t: TreeTopology, adv: AdviceAssignment) -> dict[int, int]:
    """|advTo(u)| for every leaf u, counting advice at internal nodes only."""
    internal = np.diff(t.cptr) > 0
    internal[t.treasure] = False
    up = internal.copy()
    up[0] = False
    up &= adv.pointer == np.where(t.parent >= 0, t.parent, -2)
    base = int(up.sum())
    psi = _psi_internal(t, adv)
    return {int(u): base + int(psi[u]) for u in t.leaves()}


def count_beating_leaves(t: TreeTopology, adv: AdviceAssignment) -> int:
    """Leaves other than τ with strictly more internal arrows toward them."""
    psi = _psi_internal(t, adv)
    leaves = t.leaves()
    leaves = leaves[leaves != t.treasure]
    return int((psi[leaves] > psi[t.treasure]).sum())


def beating_leaves_batch(t: TreeTopology, m: NoiseModel, root_seed: int, trials: int) -> np.ndarray:
    seeds = trial_seeds(root_seed, trials)
    out = np.empty(trials, dtype=np.int64)
    is_leaf = np.diff(t.cptr) == 0
    K.beating_trials(t.kernel_view(), m.kernel_env(t), seeds, t.order, is_leaf, out)
    return out


def _tri_law_conv(laws: Sequence[tuple[float, float]]) -> dict[int, float]:
    """Distribution of a sum of independent {-1, 0, +1} variables given as
    (P(-1), P(+1)) pairs."""
    dist = {0: 1.0}
    for pm, pp in laws:
        nd: dict[int, float] = {}
        p0 = 1.0 - pm - pp
        for s, w in dist.items():
            for ds, pw in ((-1, pm), (0, p0), (1, pp)):
                if pw:
                    nd[s + ds] = nd.get(s + ds, 0.0) + w * pw
        dist = nd
    return dist


def expected_beating_leaves_complete(branching: int, depth: int, q: float,
                                     root_children: int | None = None) -> float:
    """Exact E[count_beating_leaves] on a complete tree, random faults, τ a
    leaf at full depth.

    A leaf whose lowest common ancestor with τ sits at depth j beats τ iff the
    2(D-j)-1 arrows on the open path between them sum to more than zero; each
    arrow is -1 w.p. p+q/Δ, +1 w.p. q/Δ, independently.
    """
    b, D = branching, depth
    r = b if root_children is None else root_children
    if D == 0:
        return 0.0
    total = 0.0
    for j in range(D):
        dl = r if j == 0 else b + 1
        lca = (1 - q + q / dl, q / dl)
        mid = (1 - q + q / (b + 1), q / (b + 1))
        dist = _tri_law_conv([lca] + [mid] * (2 * (D - j - 1)))
        pwin = sum(w for s, w in dist.items() if s > 0)
        count = (r - 1) * b ** (D - 1) if j == 0 else (b - 1) * b ** (D - 1 - j)
        total += count * pwin
    return total


def optimal_bayes_order(t: TreeTopology, adv: AdviceAssignment) -> list[int]:
    """Leaves by decreasing number of internal arrows toward them, ties by id."""
    cnt = arrows_toward_leaves(t, adv)
    return sorted(cnt, key=lambda u: (-cnt[u], u))


def uniform_choice_floor(k: int) -> float:
    """Expected probes to find an item hidden uniformly among k."""
    if k < 1:
        raise ValueError("k must be positive")
    return (k + 1) / 2


def simulate_linear_scan(k: int, trials: int, seed: int = 0) -> tuple[float, float]:
    """Mean and standard error of the probe count of a fixed scan."""
    rng = np.random.default_rng(seed)
    hidden = rng.integers(0, k, size=trials)
    order = rng.permutation(k)  # any fixed order
    pos = np.empty(k, dtype=np.int64)
    pos[order] = np.arange(1, k + 1)
    probes = pos[hidden].astype(float)
    return float(probes.mean()), float(probes.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0


# tail bounds ----------------------------------------------------------------

@dataclass(frozen=True)
class TailCheck:
    empirical: float
    stderr: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.empirical <= self.bound + 3 * self.stderr


def tail_bound_check(degrees: Sequence[int], qs: Sequence[float], eps: float, m: float,
                     trials: int = 100_000, seed: int = 0, check_hypothesis: bool = True) -> TailCheck:
    """P(Σ X_i ≥ m) for the weighted three-point law against
    (1-ε)^ℓ e^{-3m/4} ∏ Δ_i^{-1/2}."""
    deg = np.asarray(degrees, dtype=float)
    q = np.asarray(qs, dtype=float)
    ell = deg.size
    if q.size != ell:
        raise ValueError("degree and q profiles differ in length")
    if check_hypothesis and ell and np.any(q >= star_cap(deg, eps)):
        raise HypothesisViolated("the star condition fails for some i")
    bound = (1 - eps) ** ell * math.exp(-0.75 * m) * float(np.prod(deg ** -0.5)) if ell else math.exp(-0.75 * m)
    if ell == 0:
        emp = 1.0 if m <= 0 else 0.0
        return TailCheck(emp, 0.0, bound)
    rng = np.random.default_rng(seed)
    pm = np.where(deg > 1, 1 - q + q / deg, 1.0)
    pp = np.where(deg > 1, q / deg, 0.0)
    u = rng.random((trials, ell))
    lw = np.log(deg)
    x = np.where(u < pm, -lw, np.where(u < pm + pp, lw, 0.0))
    hit = x.sum(axis=1) >= m - 1e-12
    emp = float(hit.mean())
    return TailCheck(emp, math.sqrt(max(emp * (1 - emp), 1.0 / trials) / trials), bound)


def tail_bound_check_regular(delta: int, q: float, ell: int, h: int, c: float | None = None,
                             trials: int = 100_000, seed: int = 0,
                             check_hypothesis: bool = True) -> TailCheck:
    """P(Σ X_i ≥ -h) for the ±1 law against (4√Δ)^h Δ^{-ℓ/2}.

    The -1 value carries p + q/Δ so that the three masses sum to one.
    Hypothesis: q < c/√Δ with c < 1/64 (without ``c``, q√Δ < 1/64).
    """
    if check_hypothesis:
        cc = q * math.sqrt(delta) * (1 + 1e-12) if c is None else c
        if not (cc < 1 / 64 and q < cc / math.sqrt(delta) + 1e-15 and 0 <= h <= ell):
            raise HypothesisViolated("needs q < c/√Δ with c < 1/64 and 0 ≤ h ≤ ℓ")
    bound = (4 * math.sqrt(delta)) ** h * delta ** (-ell / 2)
    rng = np.random.default_rng(seed)
    pm = 1 - q + q / delta
    pp = q / delta
    u = rng.random((trials, ell))
    x = np.where(u < pm, -1, np.where(u < pm + pp, 1, 0))
    emp = float((x.sum(axis=1) >= -h).mean())
    return TailCheck(emp, math.sqrt(max(emp * (1 - emp), 1.0 / trials) / trials), bound)
