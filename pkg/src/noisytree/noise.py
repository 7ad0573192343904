"""Permanent advice: fault models, sampling and exact enumeration."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Union

import numpy as np

from . import _kernels as K
from ._rng import hash3_np, uniform_np, SLOT_FAULT, SLOT_POINTER
from .errors import EnumerationCapExceeded, MissingAdversary, TreeFormatError
from .treekit import CompleteTree, TreeTopology

Tree = Union[TreeTopology, CompleteTree]

RANDOM = "random"
SEMI = "semiadv"
_RULES = {"root": 0, "first_child": 1, "map": 2}
DEFAULT_ENUM_CAP = 12
EPS_DEFAULT = (1.0 - 2.0 ** -0.25) / 2.0


def star_cap(degree, eps: float):
    """Largest q allowed at a node of the given degree under the star condition."""
    d = np.asarray(degree, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (1.0 - eps - d ** -0.25) / (np.sqrt(d) + d ** 0.25)
    val = np.where(d > 0, val, 0.0)
    return float(val) if np.ndim(val) == 0 else val


def condition_star_max_q(t: TreeTopology, eps: float) -> np.ndarray:
    """Per-node star-condition bound (1-ε-Δ^{-1/4}) / (√Δ + Δ^{1/4})."""
    return star_cap(t.degree, eps)


def _parse_rule(rule: str):
    kind, *args = rule.split(":")
    vals = [float(a) for a in args]
    if kind == "star" and len(vals) == 2:
        frac, eps = vals
        return lambda deg: np.clip(frac * star_cap(deg, eps), 0.0, 1.0)
    if kind == "invdeg" and len(vals) == 1:
        return lambda deg: np.clip(vals[0] / np.maximum(deg, 1), 0.0, 1.0)
    if kind == "invsqrt" and len(vals) == 1:
        return lambda deg: np.clip(vals[0] / np.sqrt(np.maximum(deg, 1)), 0.0, 1.0)
    raise ValueError(f"unknown q rule {rule!r} (use star:FRAC:EPS, invdeg:C or invsqrt:C)")


@dataclass(frozen=True)
class NoiseModel:
    """Fault probabilities plus fault mode.

    ``q`` is the default per-node probability.  ``q_rule`` replaces it by a
    function of the node degree (``star:FRAC:EPS`` = FRAC times the star-condition cap,
    ``invdeg:C`` = C/Δ, ``invsqrt:C`` = C/√Δ); ``overrides`` pins single nodes.
    In semi-adversarial mode ``adversary`` picks the faulty pointer:
    ``root`` (toward σ; σ itself points at its first child), ``first_child``
    (leaves point up) or ``map`` (read ``adversary_map``).
    """

    mode: str = RANDOM
    q: float = 0.0
    q_rule: str | None = None
    overrides: Mapping[int, float] | None = None
    adversary: str | None = None
    adversary_map: Mapping[int, int] | None = field(default=None, hash=False)

    def __post_init__(self):
        if self.mode not in (RANDOM, SEMI):
            raise ValueError(f"unknown fault mode {self.mode!r}")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        if self.q_rule is not None:
            _parse_rule(self.q_rule)
        for u, qu in (self.overrides or {}).items():
            if not 0.0 <= qu <= 1.0:
                raise ValueError(f"q at node {u} outside [0, 1]")
        if self.mode == SEMI:
            if self.adversary is None and self.adversary_map is not None:
                object.__setattr__(self, "adversary", "map")
            if self.adversary not in _RULES:
                raise MissingAdversary("semi-adversarial mode needs an adversary (root, first_child or map)")
            if self.adversary == "map" and self.adversary_map is None:
                raise MissingAdversary("adversary 'map' given without adversary_map")

    # per-node probabilities
    def q_for_degree(self, degree):
        if self.q_rule is None:
            return np.full(np.shape(degree), self.q) if np.ndim(degree) else self.q
        return _parse_rule(self.q_rule)(np.asarray(degree, dtype=np.float64))

    def q_array(self, t: TreeTopology) -> np.ndarray:
        qs = np.asarray(self.q_for_degree(t.degree), dtype=np.float64).copy()
        if qs.ndim == 0:
            qs = np.full(t.n, float(qs))
        for u, qu in (self.overrides or {}).items():
            if not 0 <= u < t.n:
                raise ValueError(f"override for node {u} outside the tree")
            qs[u] = qu
        return qs

    def q_max(self, t: TreeTopology) -> float:
        return float(self.q_array(t).max())

    def validate(self, t: Tree) -> None:
        if self.adversary == "map":
            if not isinstance(t, TreeTopology):
                raise ValueError("adversary maps need an explicit tree")
            for u, v in self.adversary_map.items():
                if u == t.treasure:
                    raise ValueError("the treasure has no advice, so no adversary entry")
                if not 0 <= u < t.n or v not in t.neighbors(u):
                    raise ValueError(f"adversary entry {u}->{v} is not an edge")
            missing = [u for u in range(t.n) if u != t.treasure and u not in self.adversary_map]
            if missing:
                raise MissingAdversary(f"adversary map lacks nodes {missing[:5]}")

    def adversary_target(self, t: TreeTopology, u: int) -> int:
        if self.adversary == "map":
            return int(self.adversary_map[u])
        kids = t.children(u)
        if self.adversary == "first_child" and kids.size:
            return int(kids[0])
        return int(t.parent[u]) if u != 0 else int(kids[0])

    def kernel_env(self, t: Tree, ptr: np.ndarray | None = None) -> tuple:
        """Advice-source tuple for the compiled kernels."""
        self.validate(t)
        semi = 1 if self.mode == SEMI else 0
        rule = _RULES.get(self.adversary or "root", 0)
        amap = np.zeros(1, dtype=np.int64)
        if rule == 2:
            amap = np.full(t.n, -1, dtype=np.int64)
            for u, v in self.adversary_map.items():
                amap[u] = v
        if isinstance(t, CompleteTree):
            if self.overrides:
                raise ValueError("per-node overrides need an explicit tree")
            top = max(t.root_children, t.branching + 1) + 1
            q_node = np.zeros(0)
            q_deg = np.asarray(self.q_for_degree(np.arange(top)), dtype=np.float64)
            if q_deg.ndim == 0:
                q_deg = np.full(top, float(q_deg))
        else:
            q_node = self.q_array(t)
            q_deg = np.zeros(1)
        use = 0 if ptr is None else 1
        p = np.zeros(1, dtype=np.int64) if ptr is None else np.ascontiguousarray(ptr, dtype=np.int64)
        return (use, p, semi, q_node, q_deg, rule, amap)


def random_noise(q: float) -> NoiseModel:
    return NoiseModel(RANDOM, q)


def semi_adversarial(q: float, adversary: str = "root") -> NoiseModel:
    return NoiseModel(SEMI, q, adversary=adversary)


@dataclass(frozen=True, eq=False)
class AdviceAssignment:
    """One neighbor per node (-1 at τ) plus the fault flags; read-only."""

    pointer: np.ndarray
    faulty: np.ndarray

    def __post_init__(self):
        p = np.array(self.pointer, dtype=np.int64)
        f = np.array(self.faulty, dtype=bool)
        p.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "pointer", p)
        object.__setattr__(self, "faulty", f)

    def __getitem__(self, u: int) -> int:
        return int(self.pointer[u])

    def __len__(self) -> int:
        return self.pointer.size

    def __eq__(self, other) -> bool:
        return (isinstance(other, AdviceAssignment) and np.array_equal(self.pointer, other.pointer)
                and np.array_equal(self.faulty, other.faulty))

    def __hash__(self) -> int:
        return hash(self.pointer.tobytes())


def correct_pointers(t: TreeTopology) -> np.ndarray:
    ptr = t.parent.copy()
    tp = t.tau_path
    ptr[tp[:-1]] = tp[1:]
    ptr[t.treasure] = -1
    return ptr


def sample_advice(t: TreeTopology, m: NoiseModel, seed: int) -> AdviceAssignment:
    """Advice for one trial; a pure function of (tree, model, seed).

    Node u is faulty iff U(hash(seed, u, 0)) < q_u; a faulty node in random
    mode points at neighbor floor(U(hash(seed, u, 1)) · Δ_u), neighbors
    ordered parent first, then children.  Vectorised numpy; the compiled
    kernels evaluate the same formula lazily.
    """
    m.validate(t)
    n = t.n
    ids = np.arange(n, dtype=np.uint64)
    q = m.q_array(t)
    faulty = uniform_np(hash3_np(seed, ids, SLOT_FAULT)) < q
    faulty[t.treasure] = False
    ptr = correct_pointers(t)
    if m.mode == RANDOM:
        deg = t.degree
        k = np.minimum((uniform_np(hash3_np(seed, ids, SLOT_POINTER)) * deg).astype(np.int64),
                       np.maximum(deg - 1, 0))
        nonroot = np.arange(n) != 0
        j = k - nonroot  # child slot, -1 means parent
        child = t.cidx[np.clip(t.cptr[:-1] + j, 0, max(t.cidx.size - 1, 0))] if t.cidx.size else np.zeros(n, np.int64)
        wrong = np.where(j < 0, t.parent, child)
    else:
        wrong = np.array([m.adversary_target(t, u) if u != t.treasure else -1 for u in range(n)],
                         dtype=np.int64)
    ptr = np.where(faulty, wrong, ptr)
    ptr[t.treasure] = -1
    return AdviceAssignment(ptr, faulty)


def sample_advice_kernel(t: TreeTopology, m: NoiseModel, seed: int) -> AdviceAssignment:
    """Same as :func:`sample_advice`, computed by the compiled kernel."""
    ptr = np.empty(t.n, dtype=np.int64)
    fl = np.empty(t.n, dtype=np.bool_)
    K.sample_all(t.kernel_view(), m.kernel_env(t), np.uint64(seed), ptr, fl)
    return AdviceAssignment(ptr, fl)


def node_law(t: TreeTopology, m: NoiseModel, u: int,
             qs: np.ndarray | None = None) -> list[tuple[int, Fraction]]:
    """Exact pointer law at ``u`` as (neighbor, probability) pairs.

    Probabilities are the decimal value of q_u as a fraction, so q=0.3 gives
    exactly 3/10.
    """
    if u == t.treasure:
        return [(-1, Fraction(1))]
    qs = m.q_array(t) if qs is None else qs
    q = Fraction(repr(float(qs[u])))
    good = t.correct_pointer(u)
    nb = t.neighbors(u)
    law: dict[int, Fraction] = {}
    if m.mode == RANDOM:
        for v in nb:
            law[v] = q / len(nb)
        law[good] += 1 - q
    else:
        law[good] = 1 - q
        bad = m.adversary_target(t, u)
        law[bad] = law.get(bad, Fraction(0)) + q
    return [(v, p) for v, p in sorted(law.items()) if p > 0]


def enumerate_advice(t: TreeTopology, m: NoiseModel,
                     cap: int = DEFAULT_ENUM_CAP) -> Iterator[tuple[AdviceAssignment, Fraction]]:
    """Every advice assignment with its exact probability.

    Only nodes whose law has more than one outcome count toward ``cap``.
    The faulty flag of an enumerated assignment marks pointers that differ
    from the correct one (a faulty node that happens to point correctly is
    indistinguishable and is reported as sound).
    """
    m.validate(t)
    qs = m.q_array(t)
    laws = [node_law(t, m, u, qs) for u in range(t.n)]
    free = [u for u in range(t.n) if len(laws[u]) > 1]
    if len(free) > cap:
        raise EnumerationCapExceeded(f"{len(free)} advice-bearing nodes exceed cap {cap}")
    base = np.array([laws[u][0][0] for u in range(t.n)], dtype=np.int64)
    good = correct_pointers(t)
    for combo in itertools.product(*(laws[u] for u in free)):
        ptr = base.copy()
        prob = Fraction(1)
        for u, (v, p) in zip(free, combo):
            ptr[u] = v
            prob *= p
        for u in range(t.n):
            if u not in free:
                prob *= laws[u][0][1]
        yield AdviceAssignment(ptr, ptr != good), prob


def advice_from_pointers(t: TreeTopology, pointer) -> AdviceAssignment:
    """Wrap a hand-written pointer list (τ entry ignored) after checking edges."""
    ptr = np.asarray(pointer, dtype=np.int64).copy()
    ptr[t.treasure] = -1
    for u in range(t.n):
        if u != t.treasure and int(ptr[u]) not in t.neighbors(u):
            raise ValueError(f"pointer {u}->{ptr[u]} is not an edge")
    return AdviceAssignment(ptr, ptr != correct_pointers(t))


def read_adversary(fname: str) -> dict[int, int]:
    out: dict[int, int] = {}
    with open(fname) as fh:
        for ln in fh:
            ln = ln.split("#")[0].strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) != 2:
                raise TreeFormatError(f"bad adversary line {ln!r}")
            out[int(parts[0])] = int(parts[1])
    return out


def read_q_overrides(fname: str) -> dict[int, float]:
    """Per-node q file: lines `node q`."""
    out: dict[int, float] = {}
    with open(fname) as fh:
        for ln in fh:
            ln = ln.split("#")[0].strip()
            if ln:
                u, qv = ln.split()
                out[int(u)] = float(qv)
    return out
