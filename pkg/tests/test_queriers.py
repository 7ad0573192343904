import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noisytree._rng import trial_seeds
from noisytree.noise import NoiseModel, sample_advice, star_cap
from noisytree.queriers import (a_loop, a_sep, a_two_layers, exhaustive, h_for, interleave, is_misleading,
                                kappa_default, local, local_ball, misleading_root_rate, promising,
                                two_layer_radii, Strand)
from noisytree.treekit import build_complete_ary, build_heap_ary, build_path, centroid_decomposition, generate

from conftest import small_trees


def test_radii():
    assert h_for(100, 0.5) == math.ceil(-3 * math.log(200) / math.log(0.5))
    assert kappa_default(0.5) == math.ceil(3 / math.log(2))
    h1, h2 = two_layer_radii(1000, 2, 3)
    assert h1 == math.ceil(2 * math.log(1000))
    assert h2 == math.ceil(3 * math.log(math.log(1000)))


@given(small_trees(max_n=30), st.floats(0, 1), st.integers(0, 2**30))
def test_a_sep_always_finds_treasure(t, q, seed):
    adv = sample_advice(t, NoiseModel(q=q), seed)
    for algo in (lambda: a_sep(t, adv, h=2), lambda: a_sep(t, adv), lambda: a_two_layers(t, adv)):
        tr = algo()
        assert tr.terminal == t.treasure
        assert tr.visits[-1] == t.treasure
        assert tr.queries <= 3 * t.n


@given(small_trees(max_n=30), st.floats(0, 1), st.integers(0, 2**30))
def test_a_loop_finds_treasure(t, q, seed):
    adv = sample_advice(t, NoiseModel(q=q), seed)
    tr = a_loop(t, adv)
    assert tr.visits[-1] == t.treasure
    assert len(set(tr.visits)) == tr.queries <= t.n


def test_a_loop_on_noiseless_path():
    t = build_path(4)
    assert a_loop(t, sample_advice(t, NoiseModel(q=0.0), 0)).queries == 5


def test_exhaustive_is_bfs():
    t = build_complete_ary(2, 2, 2)
    assert exhaustive(t) == list(range(t.n))


def test_interleave_round_robin():
    a = Strand([1, 2, 3, 9], True, False)
    b = Strand([4, 9], True, False)
    total, visits, pos = interleave([a, b], 9)
    assert visits[:3] == [1, 4, 2]
    assert visits[-1] == 9
    assert total == len(visits) == 4


def test_a_sep_noiseless_binary():
    t = build_complete_ary(2, 6, 6)
    tr = a_sep(t, sample_advice(t, NoiseModel(q=0.0), 0))
    assert tr.terminal == t.treasure
    assert tr.queries <= 2 * 7


def test_local_ball_regular_nominees_at_depth_h():
    t = build_complete_ary(2, 5, 5)
    adv = sample_advice(t, NoiseModel(q=0.0), 0)
    ball = local_ball(t, adv, 0, 3, weighted=False)
    assert sorted(t.depth[ball.nominees()].tolist()) == [3] * 8


def test_promising_matches_direct_sum():
    t = build_complete_ary(2, 4, 4)
    adv = sample_advice(t, NoiseModel(q=0.0), 0)
    # on the treasure path every arrow points forward
    v = int(t.tau_path[3])
    assert promising(t, adv, 0, v, 3, weighted=False)
    other = int(t.children(0)[1])
    w = int(t.children(int(t.children(other)[0]))[0])
    assert not promising(t, adv, 0, w, 3, weighted=False)


def test_local_verdicts():
    t = build_complete_ary(2, 4, 4)
    adv = sample_advice(t, NoiseModel(q=0.0), 0)
    assert local(t, adv, 0, 10, weighted=False).kind == "treasure"
    v = local(t, adv, 0, 2, weighted=False)
    assert v.kind == "component" and v.component == t.children(0)[0]


@given(small_trees(max_n=20), st.floats(0, 0.6), st.integers(0, 2**30), st.integers(1, 4),
       st.booleans())
def test_misleading_kernel_matches_python(t, q, seed, h, weighted):
    m = NoiseModel(q=q)
    s = trial_seeds(seed, 3)
    fast = misleading_root_rate(t, m, h, weighted, s)
    slow = [is_misleading(t, sample_advice(t, m, int(x)), 0, h, weighted) for x in s]
    assert fast.tolist() == slow


def misleading_probability(delta: int, q: float, h: int) -> float:
    """Exact P(root is h-misleading) on the degree-Δ complete tree, τ deeper than h.

    ±1 arrow sums along [σ, v⟩ for nominees v at depth h; promising means a
    sum of at least (2/3)h.  Off-path subtrees: let M_k be the best sum from a
    depth-k node down to depth h.  With b = Δ-1 children, the node points up
    (p_up) giving -1 + max of the b child maxima, or toward child j (q/Δ each)
    lifting only that branch:
        F_k(x) = p_up F_{k+1}(x+1)^b + b (q/Δ) F_{k+1}(x-1) F_{k+1}(x)^(b-1).
    """
    b = delta - 1
    thr = math.ceil(2 * h / 3 - 1e-9)
    off = 2 * h + 4
    xs = np.arange(-off, off + 1)
    F = (xs >= 0).astype(float)  # M_h = 0

    def at(F, x):
        i = np.clip(x + off, -1, 2 * off)
        return np.where(i < 0, 0.0, F[np.maximum(i, 0)])

    p_up = 1 - q + q / delta
    for _ in range(h - 1):  # depths h-1 .. 1
        F = p_up * at(F, xs + 1) ** b + b * (q / delta) * at(F, xs - 1) * at(F, xs) ** (b - 1)
    below = lambda r: float(at(F, np.array([thr - 1 - r]))[0])  # P(r + M_1 < thr)

    # τ-side path sum over depths 1..h-1: +1 forward, -1 up, 0 sideways
    fw, up = 1 - q + q / delta, q / delta
    dist = {0: 1.0}
    for _ in range(h - 1):
        nxt = {}
        for s, p in dist.items():
            for step, w in ((1, fw), (-1, up), (0, 1 - fw - up)):
                nxt[s + step] = nxt.get(s + step, 0.0) + p * w
        dist = nxt
    tail = lambda r: sum(p for s, p in dist.items() if r + s >= thr)

    good_root = 1 - q + q / delta
    ok = good_root * tail(1) * below(0) ** b
    ok += (q / delta) * (delta - 1) * tail(0) * below(1) * below(0) ** (b - 1)
    return 1 - ok


@pytest.mark.parametrize("h", [3, 4, 6])
def test_misleading_rate_matches_exact_dp(h):
    delta, eps = 9, 0.1
    q = 0.99 * star_cap(delta, eps)
    m = NoiseModel(q=q)
    t = generate(f"regular:delta={delta},depth={h + 2},implicit=1")
    trials = 20_000
    hits = misleading_root_rate(t, m, h, False, trial_seeds(123 + h, trials))
    p = misleading_probability(delta, q, h)
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(hits.mean() - p) <= 3 * se + 1e-12
    assert p <= 2 * (1 - eps) ** h


def test_misleading_dp_against_enumeration_small():
    # Δ=3, h=2: explicit enumeration of the kernel over many seeds agrees with the DP
    delta, h, q = 3, 2, 0.4
    t = generate(f"regular:delta={delta},depth={h + 2}")
    hits = misleading_root_rate(t, NoiseModel(q=q), h, False, trial_seeds(5, 40_000))
    p = misleading_probability(delta, q, h)
    assert abs(hits.mean() - p) <= 3 * math.sqrt(p * (1 - p) / hits.size)


def test_two_layers_on_heap_tree():
    t = build_heap_ary(3, 200)
    seps = centroid_decomposition(t)
    adv = sample_advice(t, NoiseModel(q=0.05), 3)
    tr = a_two_layers(t, adv, seps=seps)
    assert tr.terminal == t.treasure and tr.queries <= 3 * t.n
