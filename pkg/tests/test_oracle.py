import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noisytree.errors import EnumerationCapExceeded, HypothesisViolated, InvalidSpec
from noisytree.noise import NoiseModel, enumerate_advice, sample_advice, star_cap
from noisytree.oracle import (arrows_toward_leaves, beating_leaves_batch, count_beating_leaves,
                              exact_expected_cost, expected_beating_leaves_complete, optimal_bayes_order,
                              simulate_linear_scan, tail_bound_check, tail_bound_check_regular,
                              uniform_choice_floor)
from noisytree.treekit import build_complete_ary, build_path, build_star, generate

from conftest import small_trees


@pytest.mark.parametrize("q", ["0", "1/5", "1/2", "1"])
def test_star_walk_by_hand(q):
    # root points at τ: 2 queries; elsewhere: 3 queries and 3 moves
    q = Fraction(q)
    t = build_star(5)
    p = 1 - q + q / 5
    m = NoiseModel(q=float(q))
    assert exact_expected_cost(t, m, "a_walk", "queries") == 2 * p + 3 * (1 - p)
    assert exact_expected_cost(t, m, "a_walk", "moves") == p + 3 * (1 - p)


@given(small_trees(max_n=10))
def test_noiseless_cost_is_depth(t):
    d = int(t.depth[t.treasure])
    assert exact_expected_cost(t, NoiseModel(q=0.0), "a_walk", "moves") == d
    assert exact_expected_cost(t, NoiseModel(q=0.0), "pf", "moves", lam=1) == d


def test_oracle_refusals():
    t = build_complete_ary(2, 4, 4)
    with pytest.raises(EnumerationCapExceeded):
        exact_expected_cost(t, NoiseModel(q=0.1), "a_walk")
    with pytest.raises(InvalidSpec):
        exact_expected_cost(build_path(2), NoiseModel(q=0.1), "a_sep", "moves")
    with pytest.raises(InvalidSpec):
        exact_expected_cost(build_path(2), NoiseModel(q=0.1), "bogus")


def brute_beating(t, m):
    return float(sum(p * count_beating_leaves(t, adv) for adv, p in enumerate_advice(t, m)))


@pytest.mark.parametrize("b,D,r", [(2, 2, 2), (2, 3, 2), (3, 2, 3), (2, 2, 3)])
@pytest.mark.parametrize("q", [0.2, 0.5, 0.9])
def test_expected_beating_leaves_closed_form(b, D, r, q):
    t = generate(f"complete:branching={b},depth={D},root_children={r}")
    assert expected_beating_leaves_complete(b, D, q, r) == pytest.approx(brute_beating(t, NoiseModel(q=q)))


def test_beating_batch_within_3_sigma():
    t = generate("regular:delta=5,depth=4")
    out = beating_leaves_batch(t, NoiseModel(q=0.5), 3, 4000)
    want = expected_beating_leaves_complete(4, 4, 0.5, 5)
    assert abs(out.mean() - want) <= 3 * out.std(ddof=1) / math.sqrt(out.size)


@given(small_trees(max_n=15), st.floats(0, 1), st.integers(0, 2**30))
def test_beating_count_from_arrow_counts(t, q, seed):
    adv = sample_advice(t, NoiseModel(q=q), seed)
    if not t.is_leaf(t.treasure):
        return
    cnt = arrows_toward_leaves(t, adv)
    want = sum(1 for u, c in cnt.items() if u != t.treasure and c > cnt[t.treasure])
    assert count_beating_leaves(t, adv) == want
    order = optimal_bayes_order(t, adv)
    assert sorted(order) == sorted(cnt)
    assert all(cnt[a] >= cnt[b] for a, b in zip(order, order[1:]))


def test_uniform_scan():
    assert uniform_choice_floor(1) == 1
    assert uniform_choice_floor(10) == 5.5
    mean, se = simulate_linear_scan(5, 200_000, 2)
    assert abs(mean - 3) <= 3 * se
    assert simulate_linear_scan(1, 10) == (1.0, 0.0)


def exact_tail(deg, qs, m):
    """P(Σ X_i ≥ m) by enumerating the three-point laws."""
    total = 0.0
    for signs in itertools.product((-1, 0, 1), repeat=len(deg)):
        p, s = 1.0, 0.0
        for sg, d, q in zip(signs, deg, qs):
            pm, pp = 1 - q + q / d, q / d
            p *= {-1: pm, 0: 1 - pm - pp, 1: pp}[sg]
            s += sg * math.log(d)
        if s >= m - 1e-12:
            total += p
    return total


@pytest.mark.parametrize("deg,frac,m", [([4, 9], 0.9, 0.0), ([16, 4, 25], 0.5, -1.0),
                                        ([2, 3, 5, 7], 0.99, -3.0)])
def test_tail_empirical_matches_exact(deg, frac, m):
    eps = 0.05
    qs = [frac * star_cap(d, eps) for d in deg]
    r = tail_bound_check(deg, qs, eps, m, trials=200_000, seed=1)
    want = exact_tail(deg, qs, m)
    assert abs(r.empirical - want) <= 3 * max(r.stderr, 1e-9)
    assert r.holds


def test_tail_hypotheses():
    with pytest.raises(HypothesisViolated):
        tail_bound_check([4], [0.5], 0.1, 0.0)
    # Δ=16, q=0.01 gives q√Δ = 0.04 > 1/64
    with pytest.raises(HypothesisViolated):
        tail_bound_check_regular(16, 0.01, 6, 2)
    r = tail_bound_check_regular(16, 0.01, 6, 2, check_hypothesis=False)
    assert r.bound == pytest.approx(16**2 * 16 ** -3)
    ok = tail_bound_check_regular(16, 0.001, 6, 2, c=0.01)
    assert ok.holds
