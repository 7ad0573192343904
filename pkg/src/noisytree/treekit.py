"""Rooted trees, generators and the structural weights the searchers use.

Two concrete tree types share one interface:

* :class:`TreeTopology` stores parent/children arrays explicitly.
* :class:`CompleteTree` is an implicit complete tree numbered in BFS order,
  used when the node count is far beyond what fits in memory (advice is then
  sampled lazily by hashing, see :mod:`noisytree.noise`).

Both expose ``kernel_view()``, the flat tuple the compiled kernels consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, TreeFormatError

DEFAULT_BUDGET = 10**6

_EMPTY = np.zeros(1, dtype=np.int64)


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TreeTopology:
    """Explicit rooted tree with root 0.

    ``parent[0] == -1``.  Children are kept in ascending id order, which fixes
    every tie-break downstream.
    """

    parent: np.ndarray
    treasure: int
    # caches, filled in __post_init__
    cptr: np.ndarray = field(init=False, repr=False)
    cidx: np.ndarray = field(init=False, repr=False)
    depth: np.ndarray = field(init=False, repr=False)
    degree: np.ndarray = field(init=False, repr=False)
    order: np.ndarray = field(init=False, repr=False)
    leafcount: np.ndarray = field(init=False, repr=False)
    log_beta: np.ndarray = field(init=False, repr=False)
    tau_path: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        parent = np.asarray(self.parent, dtype=np.int64)
        n = parent.size
        if n < 1:
            raise TreeFormatError("a tree needs at least one node")
        if parent[0] != -1:
            raise TreeFormatError("node 0 must be the root (parent -1)")
        if n > 1 and (parent[1:].min() < 0 or parent[1:].max() >= n):
            raise TreeFormatError("parent id out of range")
        if not 0 <= int(self.treasure) < n:
            raise TreeFormatError(f"treasure {self.treasure} out of range")
        ch = parent[1:]
        kids = np.arange(1, n, dtype=np.int64)
        srt = np.lexsort((kids, ch))
        cidx = kids[srt]
        counts = np.bincount(ch, minlength=n) if n > 1 else np.zeros(n, dtype=np.int64)
        cptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=cptr[1:])
        # BFS from the root; anything unreached means a cycle or a forest
        order = np.empty(n, dtype=np.int64)
        depth = np.full(n, -1, dtype=np.int64)
        order[0], depth[0] = 0, 0
        head, tail = 0, 1
        while head < tail:
            u = order[head]
            head += 1
            c = cidx[cptr[u]:cptr[u + 1]]
            k = c.size
            if k:
                if tail + k > n or (depth[c] >= 0).any():
                    raise TreeFormatError("parent array contains a cycle")
                depth[c] = depth[u] + 1
                order[tail:tail + k] = c
                tail += k
        if tail != n:
            raise TreeFormatError("parent array is not connected (cycle or forest)")
        degree = counts.astype(np.int64) + 1
        degree[0] -= 1
        # level-synchronous passes (order is sorted by depth)
        bounds = np.searchsorted(depth[order], np.arange(depth.max() + 2))
        levels = [order[bounds[k]:bounds[k + 1]] for k in range(1, bounds.size - 1)]
        logdeg = np.log(np.maximum(degree, 1).astype(np.float64))
        log_beta = np.zeros(n)
        for lv in levels:
            log_beta[lv] = log_beta[parent[lv]] + logdeg[parent[lv]]
        leaf = np.where(counts == 0, 1, 0).astype(np.int64)
        for lv in reversed(levels):
            np.add.at(leaf, parent[lv], leaf[lv])
        tp = [int(self.treasure)]
        while tp[-1] != 0:
            tp.append(int(parent[tp[-1]]))
        tp.reverse()
        lb = np.asarray(log_beta, dtype=np.float64)
        lb.setflags(write=False)
        for name, val in (("parent", _frozen(parent)), ("cptr", _frozen(cptr)),
                          ("cidx", _frozen(cidx)), ("depth", _frozen(depth)),
                          ("degree", _frozen(degree)), ("order", _frozen(order)),
                          ("leafcount", _frozen(leaf)), ("log_beta", lb),
                          ("tau_path", _frozen(tp))):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "treasure", int(self.treasure))

    # basic accessors
    @property
    def n(self) -> int:
        return int(self.parent.size)

    @property
    def root(self) -> int:
        return 0

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    @property
    def treasure_depth(self) -> int:
        return int(self.depth[self.treasure])

    def children(self, u: int) -> np.ndarray:
        return self.cidx[self.cptr[u]:self.cptr[u + 1]]

    def neighbors(self, u: int) -> list[int]:
        """Parent first (if any), then children ascending."""
        nb = [] if u == 0 else [int(self.parent[u])]
        return nb + [int(c) for c in self.children(u)]

    def is_leaf(self, u: int) -> bool:
        return self.cptr[u + 1] == self.cptr[u]

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.cptr) == 0)

    def is_ancestor(self, a: int, u: int) -> bool:
        """True iff ``a`` lies on [σ, u] (a node is its own ancestor)."""
        da = self.depth[a]
        while self.depth[u] > da:
            u = self.parent[u]
        return int(u) == int(a)

    def correct_pointer(self, u: int) -> int:
        """Neighbor of ``u`` on the path toward the treasure (-1 at τ)."""
        if u == self.treasure:
            return -1
        du = self.depth[u]
        if du < self.tau_path.size - 1 and self.tau_path[du] == u:
            return int(self.tau_path[du + 1])
        return int(self.parent[u])

    def next_hop(self, w: int, target: int) -> int:
        """Neighbor of ``w`` on the path from ``w`` to ``target``."""
        if w == target:
            raise ValueError("next_hop from a node to itself")
        x = target
        if self.depth[x] > self.depth[w]:
            while self.depth[x] > self.depth[w] + 1:
                x = self.parent[x]
            if self.parent[x] == w:
                return int(x)
        return int(self.parent[w])

    def distance(self, u: int, v: int) -> int:
        d = 0
        while u != v:
            if self.depth[u] >= self.depth[v]:
                u = self.parent[u]
            else:
                v = self.parent[v]
            d += 1
        return d

    def kernel_view(self) -> tuple:
        return (0, 0, 0, self.max_depth, _EMPTY, self.parent, self.depth,
                self.cptr, self.cidx, self.leafcount, self.treasure, self.tau_path)

    def with_treasure(self, treasure: int) -> "TreeTopology":
        return TreeTopology(self.parent, treasure)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TreeTopology) and self.treasure == other.treasure
                and np.array_equal(self.parent, other.parent))

    def __hash__(self) -> int:
        return hash((self.treasure, self.parent.tobytes()))


@dataclass(frozen=True)
class CompleteTree:
    """Implicit complete tree in BFS numbering.

    The root has ``root_children`` children, every other internal node has
    ``branching`` children, and all leaves sit at depth ``depth``.
    """

    branching: int
    depth: int
    root_children: int
    treasure: int
    level_start: np.ndarray = field(init=False, repr=False, compare=False)
    tau_path: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.branching < 1 or self.root_children < 1 or self.depth < 0:
            raise ValueError("invalid complete-tree shape")
        starts = [0, 1]
        size = self.root_children
        for _ in range(self.depth):
            starts.append(starts[-1] + size)
            size *= self.branching
        if starts[-1] >= 2**62:
            raise BudgetExceeded("implicit tree ids would overflow int64")
        object.__setattr__(self, "level_start", _frozen(starts[: self.depth + 2]))
        path = [int(self.treasure)]
        while path[-1] != 0:
            path.append(self.parent(path[-1]))
        path.reverse()
        object.__setattr__(self, "tau_path", _frozen(path))

    @property
    def n(self) -> int:
        return int(self.level_start[-1])

    @property
    def root(self) -> int:
        return 0

    @property
    def max_depth(self) -> int:
        return self.depth

    @property
    def treasure_depth(self) -> int:
        return self.tau_path.size - 1

    def depth_of(self, u: int) -> int:
        return int(np.searchsorted(self.level_start, u, side="right")) - 1

    def parent(self, u: int) -> int:
        k = self.depth_of(u)
        if k == 0:
            return -1
        if k == 1:
            return 0
        return int(self.level_start[k - 1] + (u - self.level_start[k]) // self.branching)

    def children(self, u: int) -> np.ndarray:
        k = self.depth_of(u)
        if k >= self.depth:
            return np.zeros(0, dtype=np.int64)
        if k == 0:
            return np.arange(1, 1 + self.root_children, dtype=np.int64)
        first = self.level_start[k + 1] + (u - self.level_start[k]) * self.branching
        return np.arange(first, first + self.branching, dtype=np.int64)

    def degree_of(self, u: int) -> int:
        return len(self.children(u)) + (0 if u == 0 else 1)

    def leafcount_of(self, u: int) -> int:
        k = self.depth_of(u)
        if k == self.depth:
            return 1
        if k == 0:
            return self.root_children * self.branching ** (self.depth - 1)
        return self.branching ** (self.depth - k)

    def kernel_view(self) -> tuple:
        return (1, self.root_children, self.branching, self.depth, self.level_start,
                _EMPTY, _EMPTY, _EMPTY, _EMPTY, _EMPTY, int(self.treasure), self.tau_path)

    def materialize(self, budget: int = DEFAULT_BUDGET) -> TreeTopology:
        if self.n > budget:
            raise BudgetExceeded(f"{self.n} nodes exceed budget {budget}")
        parent = np.empty(self.n, dtype=np.int64)
        parent[0] = -1
        if self.depth >= 1:
            parent[1:1 + self.root_children] = 0
        for k in range(2, self.depth + 1):
            lo, hi = self.level_start[k], self.level_start[k + 1]
            parent[lo:hi] = self.level_start[k - 1] + np.arange(hi - lo) // self.branching
        return TreeTopology(parent, self.treasure)


@dataclass(frozen=True)
class NodePath:
    """Ordered run of adjacent nodes; the flags record which ends count.

    ``[u, v]`` is ``start=True, end=True``, ``[u, v⟩`` drops ``v`` and
    ``⟨u, v⟩`` drops both.  ``nodes`` holds only the included nodes.
    """

    nodes: tuple[int, ...]
    start: int
    end: int
    include_start: bool = True
    include_end: bool = True

    def __iter__(self):
        return iter(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)


def path(t: TreeTopology, u: int, v: int, include_start: bool = True,
         include_end: bool = True) -> NodePath:
    """Simple path from ``u`` to ``v`` with the chosen endpoint convention."""
    up, down = [int(u)], [int(v)]
    while up[-1] != down[-1]:
        if t.depth[up[-1]] >= t.depth[down[-1]]:
            up.append(int(t.parent[up[-1]]))
        else:
            down.append(int(t.parent[down[-1]]))
    full = up + down[-2::-1]
    lo = 0 if include_start else 1
    hi = len(full) if include_end else len(full) - 1
    return NodePath(tuple(full[lo:hi]) if lo < hi else (), int(u), int(v),
                    include_start, include_end)


# generators ---------------------------------------------------------------

def _check_budget(n: int, budget: int | None) -> None:
    if budget is not None and n > budget:
        raise BudgetExceeded(f"tree would have {n} nodes, budget is {budget}")


def _complete_size(branching: int, depth: int, root_children: int) -> int:
    if depth == 0:
        return 1
    if branching == 1:
        return 1 + root_children * depth
    return 1 + root_children * (branching**depth - 1) // (branching - 1)


def build_complete_ary(branching: int, depth: int, treasure_depth: int,
                       root_children: int | None = None, placement: str = "leftmost",
                       budget: int | None = DEFAULT_BUDGET, implicit: bool = False):
    """Complete tree; ``implicit=True`` returns a :class:`CompleteTree`."""
    if branching < 2 or depth < 0:
        raise ValueError("need branching >= 2 and depth >= 0")
    if not 0 <= treasure_depth <= depth:
        raise ValueError("treasure_depth must lie in [0, depth]")
    rc = branching if root_children is None else int(root_children)
    if rc < 1:
        raise ValueError("root_children must be positive")
    if not implicit:
        _check_budget(_complete_size(branching, depth, rc), budget)
    shape = CompleteTree(branching, depth, rc, 0)
    lo = int(shape.level_start[treasure_depth])
    if placement == "leftmost":
        tau = lo
    elif placement == "rightmost":
        tau = int(shape.level_start[treasure_depth + 1]) - 1
    else:
        raise ValueError(f"unknown placement rule {placement!r}")
    tree = CompleteTree(branching, depth, rc, tau)
    return tree if implicit else tree.materialize(budget=tree.n)


def from_parents(parent: Sequence[int], treasure: int, relabel: bool = True) -> TreeTopology:
    """Tree from any parent list rooted at 0; ids are renumbered in BFS order
    unless ``relabel`` is false."""
    t = TreeTopology(np.asarray(parent, dtype=np.int64), treasure)
    if not relabel or np.array_equal(t.order, np.arange(t.n)):
        return t
    new = np.empty(t.n, dtype=np.int64)
    new[t.order] = np.arange(t.n)
    par = np.full(t.n, -1, dtype=np.int64)
    par[new[1:]] = new[t.parent[1:]]
    # BFS order keeps children ascending only if siblings stay in order, which
    # holds because BFS visits children in ascending old id
    return TreeTopology(par, int(new[treasure]))


def build_caterpillar(spine_len: int, star_degree: int, treasure_depth: int,
                      budget: int | None = DEFAULT_BUDGET) -> TreeTopology:
    """Spine σ=s₀ … s_L; every spine node gets leaves until its degree is
    ``star_degree``.  The treasure is the spine node at ``treasure_depth``."""
    if spine_len < 1:
        raise ValueError("spine_len must be at least 1")
    if star_degree < 2:
        raise ValueError("star_degree must be at least 2")
    if not 0 <= treasure_depth <= spine_len:
        raise ValueError("treasure_depth must lie in [0, spine_len]")
    parent = [-1]
    spine = [0]
    for i in range(1, spine_len + 1):
        parent.append(spine[-1])
        spine.append(len(parent) - 1)
    for i, s in enumerate(spine):
        nb = (i > 0) + (i < spine_len)
        for _ in range(max(0, star_degree - nb)):
            parent.append(s)
    _check_budget(len(parent), budget)
    return from_parents(parent, spine[treasure_depth])


def build_trimmed_ary(branching: int, depth: int, root_children: int | None = None,
                      budget: int | None = DEFAULT_BUDGET) -> TreeTopology:
    """Complete tree whose first root child is cut to a leaf holding τ."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    rc = branching if root_children is None else int(root_children)
    full = _complete_size(branching, depth, rc)
    sub = _complete_size(branching, depth - 1, 1)
    _check_budget(full - sub + 1, budget)
    parent = [-1] + [0] * rc
    frontier = list(range(2, 1 + rc))
    for _ in range(depth - 1):
        nxt = []
        for u in frontier:
            for _ in range(branching):
                parent.append(u)
                nxt.append(len(parent) - 1)
        frontier = nxt
    return TreeTopology(np.asarray(parent, dtype=np.int64), 1)


def build_path(length: int, treasure_depth: int | None = None) -> TreeTopology:
    """Path σ=0 - 1 - … - length; the treasure defaults to the far end."""
    d = length if treasure_depth is None else treasure_depth
    return TreeTopology(np.arange(-1, length, dtype=np.int64), d)


def build_star(leaves: int, treasure: int = 1) -> TreeTopology:
    """Root with ``leaves`` leaf children."""
    return TreeTopology(np.array([-1] + [0] * leaves, dtype=np.int64), treasure)


def build_heap_ary(branching: int, n: int, root_children: int | None = None,
                   treasure: str | int = "last", budget: int | None = DEFAULT_BUDGET) -> TreeTopology:
    """First ``n`` nodes of the BFS numbering of a complete tree."""
    _check_budget(n, budget)
    rc = branching if root_children is None else int(root_children)
    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    ids = np.arange(1, n, dtype=np.int64)
    parent[1:] = np.where(ids <= rc, 0, 1 + (ids - 1 - rc) // branching)
    tau = n - 1 if treasure == "last" else int(treasure)
    return TreeTopology(parent, tau)


def random_tree(n: int, seed: int, treasure: int | None = None) -> TreeTopology:
    """Random recursive tree (each node attaches to a uniform earlier node)."""
    rng = np.random.default_rng(seed)
    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    if n > 1:
        parent[1:] = (rng.random(n - 1) * np.arange(1, n)).astype(np.int64)
    tau = int(rng.integers(n)) if treasure is None else treasure
    return from_parents(parent, tau)


def generate(desc: str, budget: int | None = DEFAULT_BUDGET):
    """Build a tree from ``kind:key=val,...`` (the CLI/config form).

    Kinds: ``complete`` (branching, depth, treasure_depth, root_children,
    implicit), ``regular`` (delta, depth, treasure_depth: degree-regular
    complete tree), ``caterpillar``, ``trimmed``, ``path``, ``star``, ``heap``,
    ``random``.
    """
    kind, _, rest = desc.partition(":")
    kw: dict[str, str] = {}
    for part in filter(None, rest.split(",")):
        k, _, v = part.partition("=")
        kw[k.strip()] = v.strip()

    def geti(key, default=None):
        if key in kw:
            return int(kw[key])
        if default is None:
            raise ValueError(f"generator {kind!r} needs {key}=")
        return default

    implicit = kw.get("implicit", "0") in ("1", "true", "yes")
    if kind == "complete":
        depth = geti("depth")
        return build_complete_ary(geti("branching"), depth, geti("treasure_depth", depth),
                                  root_children=geti("root_children", geti("branching")),
                                  placement=kw.get("placement", "leftmost"),
                                  budget=budget, implicit=implicit)
    if kind == "regular":
        delta, depth = geti("delta"), geti("depth")
        return build_complete_ary(delta - 1, depth, geti("treasure_depth", depth), root_children=delta,
                                  placement=kw.get("placement", "leftmost"),
                                  budget=budget, implicit=implicit)
    if kind == "caterpillar":
        return build_caterpillar(geti("spine_len"), geti("star_degree"), geti("treasure_depth"), budget)
    if kind == "trimmed":
        return build_trimmed_ary(geti("branching"), geti("depth"),
                                 root_children=geti("root_children", geti("branching")), budget=budget)
    if kind == "path":
        return build_path(geti("length"), geti("treasure_depth", geti("length")))
    if kind == "star":
        return build_star(geti("leaves"), geti("treasure", 1))
    if kind == "heap":
        return build_heap_ary(geti("branching"), geti("n"),
                              root_children=geti("root_children", geti("branching")), budget=budget)
    if kind == "random":
        return random_tree(geti("n"), geti("seed", 0))
    raise ValueError(f"unknown tree generator {kind!r}")


# weights ------------------------------------------------------------------

def _path_to_root(t: TreeTopology, u: int) -> list[int]:
    out = []
    while u != 0:
        u = int(t.parent[u])
        out.append(u)
    return out  # strict ancestors, nearest first


def beta(t: TreeTopology, u: int) -> float:
    """∏ Δ_w over w ∈ [σ, u); 1 at the root."""
    return float(math.prod(int(t.degree[w]) for w in _path_to_root(t, u)))


def theta(t: TreeTopology, u: int) -> float:
    """Probability that the uniform top-down walk from σ passes through u."""
    if u == 0:
        return 1.0
    inner = _path_to_root(t, u)[:-1]  # ⟨σ, u⟩
    return 1.0 / (int(t.degree[0]) * math.prod(int(t.degree[w]) - 1 for w in inner))


def weighted_sums_check(t: TreeTopology, c: float) -> tuple[float, float]:
    """(Σ c^d(v)/β(v), Σ d(v) c^d(v)/β(v)) over all nodes."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    d = t.depth.astype(np.float64)
    w = np.exp(d * math.log(c) - t.log_beta)
    return float(w.sum()), float((d * w).sum())


# separators ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SeparatorTree:
    """Fixed centroid decomposition.

    ``sep_parent[c]`` is the separator whose removal created the component
    that ``c`` separates (-1 for the top).  ``chain[x, l]`` is the separator of
    the level-``l`` component containing ``x`` (or -1 once ``x`` itself has
    been removed).
    """

    sep_parent: np.ndarray
    level: np.ndarray
    chain: np.ndarray
    top: int

    @property
    def depth(self) -> int:
        """Edges on the longest root-to-leaf chain of the separator tree."""
        return int(self.level.max())

    def component(self, c: int) -> np.ndarray:
        """Node ids of the component whose separator is ``c``."""
        return np.flatnonzero(self.chain[:, self.level[c]] == c)

    def component_mask(self, c: int) -> np.ndarray:
        return self.chain[:, self.level[c]] == c

    def child_toward(self, c: int, v: int) -> int:
        """Separator of the sub-component of ``c``'s component holding ``v``."""
        return int(self.chain[v, self.level[c] + 1])


def centroid_decomposition(t: TreeTopology) -> SeparatorTree:
    n = t.n
    adj = [t.neighbors(u) for u in range(n)]
    removed = np.zeros(n, dtype=bool)
    sep_parent = np.full(n, -1, dtype=np.int64)
    level = np.zeros(n, dtype=np.int64)
    rows: list[tuple[int, int, np.ndarray]] = []
    stack = [(0, -1, 0)]  # (any node of component, separator parent, level)
    top = -1
    while stack:
        start, sp, lvl = stack.pop()
        # BFS over the component, then sizes bottom-up
        comp = [start]
        par = {start: -1}
        i = 0
        while i < len(comp):
            x = comp[i]
            i += 1
            for y in adj[x]:
                if not removed[y] and y != par[x]:
                    par[y] = x
                    comp.append(y)
        m = len(comp)
        size = dict.fromkeys(comp, 1)
        for x in reversed(comp[1:]):
            size[par[x]] += size[x]
        best, best_cost = -1, m + 1
        for x in comp:
            cost = m - size[x]
            for y in adj[x]:
                if not removed[y] and y != par[x]:
                    cost = max(cost, size[y])
            if cost < best_cost or (cost == best_cost and x < best):
                best, best_cost = x, cost
        c = best
        sep_parent[c], level[c] = sp, lvl
        if sp == -1:
            top = c
        rows.append((lvl, c, np.asarray(comp, dtype=np.int64)))
        removed[c] = True
        for y in adj[c]:
            if not removed[y]:
                stack.append((y, c, lvl + 1))
    chain = np.full((n, int(level.max()) + 1), -1, dtype=np.int64)
    for lvl, c, comp in rows:
        chain[comp, lvl] = c
    for a in (sep_parent, level, chain):
        a.setflags(write=False)
    return SeparatorTree(sep_parent, level, chain, top)


# file format --------------------------------------------------------------

def serialize(t: TreeTopology) -> str:
    lines = [f"{t.n} 0 {t.treasure}"]
    lines += [f"{u} {int(t.parent[u])}" for u in range(1, t.n)]
    return "\n".join(lines) + "\n"


def parse(text: str) -> TreeTopology:
    """Read ``n root treasure`` then ``node parent`` lines.

    A root other than 0 is swapped with node 0 so that σ = 0 always holds.
    """
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 3:
        raise TreeFormatError("header must be `n root treasure`")
    try:
        n, root, tau = (int(x) for x in rows[0])
    except ValueError as exc:
        raise TreeFormatError(str(exc)) from None
    if n < 1 or not (0 <= root < n and 0 <= tau < n):
        raise TreeFormatError("header ids out of range")
    if len(rows) - 1 != n - 1:
        raise TreeFormatError(f"expected {n - 1} edge lines, got {len(rows) - 1}")
    parent = np.full(n, -2, dtype=np.int64)
    parent[root] = -1
    for r in rows[1:]:
        if len(r) != 2:
            raise TreeFormatError(f"bad edge line {' '.join(r)!r}")
        u, p = int(r[0]), int(r[1])
        if not (0 <= u < n and 0 <= p < n) or u == root:
            raise TreeFormatError(f"edge {u} {p} out of range")
        if parent[u] != -2:
            raise TreeFormatError(f"node {u} has two parents")
        parent[u] = p
    if root != 0:
        swap = np.arange(n)
        swap[0], swap[root] = root, 0
        par = np.empty(n, dtype=np.int64)
        par[swap] = np.where(parent >= 0, swap[np.maximum(parent, 0)], -1)
        parent, tau = par, int(swap[tau])
    return TreeTopology(parent, tau)


def read_tree(fname: str) -> TreeTopology:
    with open(fname) as fh:
        return parse(fh.read())


def write_tree(t: TreeTopology, fname: str) -> None:
    with open(fname, "w") as fh:
        fh.write(serialize(t))


def subtree_sizes(t: TreeTopology) -> np.ndarray:
    size = np.ones(t.n, dtype=np.int64)
    for u in t.order[::-1][:-1]:
        size[t.parent[u]] += size[u]
    return size
