import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noisytree.errors import StepCapExceeded
from noisytree.memoryless import PFConfig, fit_log_slope, pf_batch, pf_hitting_growth, probabilistic_following
from noisytree.noise import NoiseModel, sample_advice
from noisytree.oracle import exact_expected_cost, pf_expected_complete, pf_quenched_expected
from noisytree.treekit import build_path, generate
from noisytree.walkers import LazyAdvice

from conftest import small_trees


def path2_hand(q: Fraction, lam: Fraction) -> Fraction:
    """σ - u - τ: from σ the walk needs 2/p steps, p = P(u steps to τ)."""
    p_good, p_bad = lam + (1 - lam) / 2, (1 - lam) / 2
    law_good = 1 - q + q / 2
    return law_good * 2 / p_good + (1 - law_good) * 2 / p_bad


@pytest.mark.parametrize("q,lam", [("0", "3/4"), ("1/2", "3/4"), ("3/10", "1/2"), ("1", "0")])
def test_path2_exact(q, lam):
    q, lam = Fraction(q), Fraction(lam)
    t = build_path(2)
    got = exact_expected_cost(t, NoiseModel(q=float(q)), "pf", "moves", lam=float(lam))
    assert got == path2_hand(q, lam)


def test_path2_simulation_within_3_sigma():
    t = build_path(2)
    m = NoiseModel(q=0.5)
    out = pf_batch(t, m, PFConfig(0.75), 7, 50_000)
    want = float(path2_hand(Fraction(1, 2), Fraction(3, 4)))
    se = out.std(ddof=1) / math.sqrt(out.size)
    assert abs(out.mean() - want) <= 3 * se


def test_follow_all_noiseless():
    t = generate("complete:branching=3,depth=6")
    adv = sample_advice(t, NoiseModel(q=0.0), 0)
    assert probabilistic_following(t, adv, PFConfig(1.0), 3) == 6


def test_config_validation():
    with pytest.raises(ValueError):
        PFConfig(1.2)
    with pytest.raises(ValueError):
        PFConfig(0.5, cap=0)
    assert PFConfig(0.0).lam == 0.0


def test_step_cap():
    t = build_path(6)
    adv = sample_advice(t, NoiseModel("semiadv", 1.0, adversary="root"), 0)
    with pytest.raises(StepCapExceeded):
        probabilistic_following(t, adv, PFConfig(1.0, cap=50), 0)


def test_quenched_infinite_when_trapped():
    t = build_path(3)
    adv = sample_advice(t, NoiseModel("semiadv", 1.0, adversary="root"), 0)
    assert pf_quenched_expected(t, adv, 1) is None


@given(small_trees(max_n=7), st.sampled_from([0.0, 0.2, 0.6]), st.sampled_from([0.25, 0.75]))
def test_quenched_matches_linear_solve(t, q, lam):
    """Expected hitting times from the linear system of the walk."""
    adv = sample_advice(t, NoiseModel(q=q), 11)
    n = t.n
    A = np.eye(n)
    b = np.ones(n)
    for u in range(n):
        if u == t.treasure:
            b[u] = 0
            continue
        nb = t.neighbors(u)
        for v in nb:
            A[u, v] -= (1 - lam) / len(nb)
        A[u, adv[u]] -= lam
    h = np.linalg.solve(A, b)
    assert float(pf_quenched_expected(t, adv, lam)) == pytest.approx(h[0], rel=1e-9)


@pytest.mark.parametrize("desc", ["complete:branching=2,depth=2", "complete:branching=2,depth=2,root_children=3",
                                  "complete:branching=3,depth=2"])
@pytest.mark.parametrize("model", [NoiseModel(q=0.3), NoiseModel("semiadv", 0.3, adversary="root"),
                                   NoiseModel("semiadv", 0.3, adversary="first_child"),
                                   NoiseModel(q_rule="invdeg:0.9")])
def test_annealed_recursion_matches_enumeration(desc, model):
    t = generate(desc)
    imp = generate(desc + ",implicit=1")
    exact = exact_expected_cost(t, model, "pf", "moves", lam=0.6)
    assert pf_expected_complete(imp, model, 0.6) == pytest.approx(float(exact), rel=1e-10)


def test_lazy_and_stored_agree():
    t = generate("complete:branching=2,depth=4")
    m = NoiseModel(q=0.2)
    a = probabilistic_following(t, sample_advice(t, m, 9), PFConfig(0.6), 4)
    b = probabilistic_following(t, LazyAdvice(m, 9), PFConfig(0.6), 4)
    assert a == b


def test_batch_reports_censoring():
    t = generate("regular:delta=6,depth=6,implicit=1")
    out = pf_batch(t, NoiseModel(q=0.9), PFConfig(0.5, cap=100), 0, 50)
    assert (out == -1).any()
    assert ((out == -1) | (out >= 6)).all()


def test_growth_fit_on_exact_geometric():
    assert fit_log_slope([1, 2, 3], [2, 4, 8]) == pytest.approx(math.log(2))
    g = pf_hitting_growth(lambda D: generate(f"regular:delta=4,depth={D},implicit=1"),
                          NoiseModel(q=0.0), 1.0, [2, 3, 4], trials=5)
    assert g.means == [2, 3, 4]
    assert g.censored == [0, 0, 0]
