import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noisytree.errors import EnumerationCapExceeded, MissingAdversary
from noisytree.noise import (EPS_DEFAULT, NoiseModel, advice_from_pointers, correct_pointers,
                             enumerate_advice, node_law, read_adversary, sample_advice,
                             sample_advice_kernel, semi_adversarial, star_cap)
from noisytree.treekit import build_complete_ary, build_path, build_star

from conftest import small_trees


def test_star_cap_formula():
    # Δ=16: (1 - ε - 1/2) / (4 + 2)
    assert star_cap(16, 0.1) == pytest.approx(0.4 / 6)
    assert star_cap(np.array([16, 81]), 0.0)[1] == pytest.approx((1 - 1 / 3) / 12)
    assert 0 < EPS_DEFAULT < 0.1


def test_q_rules():
    m = NoiseModel(q_rule="invdeg:0.9")
    assert m.q_for_degree(3) == pytest.approx(0.3)
    assert NoiseModel(q_rule="invsqrt:1").q_for_degree(4) == pytest.approx(0.5)
    assert NoiseModel(q_rule="star:0.5:0.1").q_for_degree(16) == pytest.approx(0.2 / 6)
    with pytest.raises(ValueError):
        NoiseModel(q_rule="linear:2")


def test_invalid_models():
    with pytest.raises(ValueError):
        NoiseModel(q=1.5)
    with pytest.raises(MissingAdversary):
        NoiseModel("semiadv", 0.2)
    with pytest.raises(MissingAdversary):
        NoiseModel("semiadv", 0.2, adversary="map")


def test_path_law_half():
    # σ - u - τ with q = 1/2: u points to τ w.p. 1/2 + 1/4
    t = build_path(2)
    law = dict(node_law(t, NoiseModel(q=0.5), 1))
    assert law == {0: Fraction(1, 4), 2: Fraction(3, 4)}
    assert dict(node_law(t, NoiseModel(q=0.5), 0)) == {1: Fraction(1)}


@given(small_trees(max_n=7), st.sampled_from([0.0, 0.1, 0.5, 1.0]),
       st.sampled_from(["random", "root", "first_child"]))
def test_enumeration_is_a_distribution(t, q, kind):
    m = NoiseModel(q=q) if kind == "random" else NoiseModel("semiadv", q, adversary=kind)
    total = Fraction(0)
    seen = set()
    for adv, p in enumerate_advice(t, m):
        assert p > 0
        assert adv not in seen
        seen.add(adv)
        total += p
    assert total == 1


def test_enumeration_cap():
    t = build_complete_ary(2, 4, 4)
    with pytest.raises(EnumerationCapExceeded):
        list(enumerate_advice(t, NoiseModel(q=0.2), cap=12))


def test_enumerated_faulty_marks_wrong_pointers():
    t = build_star(3)
    for adv, _ in enumerate_advice(t, NoiseModel(q=0.6)):
        assert np.array_equal(adv.faulty, adv.pointer != correct_pointers(t))


@given(small_trees(max_n=25), st.floats(0, 1), st.integers(0, 2**63 - 1),
       st.sampled_from(["random", "root", "first_child"]))
def test_numpy_and_kernel_sampling_agree(t, q, seed, kind):
    m = NoiseModel(q=q) if kind == "random" else NoiseModel("semiadv", q, adversary=kind)
    assert sample_advice(t, m, seed) == sample_advice_kernel(t, m, seed)


@given(small_trees(max_n=25), st.floats(0, 1), st.integers(0, 2**32))
def test_sampled_pointers_are_edges(t, q, seed):
    adv = sample_advice(t, NoiseModel(q=q), seed)
    good = correct_pointers(t)
    for u in range(t.n):
        if u == t.treasure:
            assert adv[u] == -1
        else:
            assert adv[u] in t.neighbors(u)
            if not adv.faulty[u]:
                assert adv[u] == good[u]


def test_zero_and_one_noise():
    t = build_complete_ary(3, 3, 3)
    assert not sample_advice(t, NoiseModel(q=0.0), 5).faulty.any()
    adv = sample_advice(t, semi_adversarial(1.0, "root"), 5)
    assert adv[0] == t.children(0)[0]
    assert all(adv[u] == t.parent[u] for u in range(1, t.n) if u != t.treasure)


def test_fault_frequency_within_3_sigma():
    t = build_complete_ary(3, 6, 6)
    q = 0.3
    m = NoiseModel(q=q)
    hits = np.concatenate([sample_advice(t, m, s).faulty for s in range(5)])
    n = hits.size - 5  # τ is never faulty
    sd = math.sqrt(q * (1 - q) / n)
    assert abs(hits.sum() / n - q) <= 3 * sd


def test_semiadv_map_from_file(tmp_path):
    t = build_path(3)
    f = tmp_path / "adv.txt"
    f.write_text("0 1\n1 0  # up\n2 1\n")
    m = NoiseModel("semiadv", 1.0, adversary_map=read_adversary(str(f)))
    adv = sample_advice(t, m, 0)
    assert list(adv.pointer) == [1, 0, 1, -1]


def test_advice_from_pointers_checks_edges():
    t = build_path(2)
    adv = advice_from_pointers(t, [1, 0, -1])
    assert list(adv.faulty) == [False, True, False]
    with pytest.raises(ValueError):
        advice_from_pointers(t, [2, 0, -1])


def test_advice_is_read_only():
    adv = sample_advice(build_path(3), NoiseModel(q=0.5), 1)
    with pytest.raises(ValueError):
        adv.pointer[0] = 3
