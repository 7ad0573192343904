import math

import pytest

from noisytree.errors import InvalidSpec
from noisytree.harness import (ExperimentSpec, csv_header, growth_factor, load_specs, run, sweep, to_csv,
                               to_jsonl, verify_threshold)
from noisytree.oracle import exact_expected_cost


def test_noiseless_binary():
    r = run(ExperimentSpec("complete:branching=2,depth=5", "a_walk", q=0.0, trials=50))
    assert r.mean("moves") == 5 and r.stderr("moves") == 0
    assert r.mean("queries") == 6
    assert r.censored_fraction == 0


def test_same_seed_same_row():
    s = ExperimentSpec("complete:branching=3,depth=4", "a_natural", q=0.3, trials=300, seed=9)
    assert run(s) == run(s)
    assert run(s).stats != run(ExperimentSpec(**{**s.__dict__, "seed": 10})).stats


@pytest.mark.parametrize("algo", ["a_walk", "pf", "a_sep", "a_two_layers", "a_loop"])
def test_worker_count_does_not_matter(algo):
    tree = "heap:branching=3,n=120" if algo in ("a_sep", "a_two_layers") else "complete:branching=2,depth=5"
    s = ExperimentSpec(tree, algo, q=0.1, trials=64, seed=4, lam=0.7 if algo == "pf" else None)
    assert to_csv([run(s, workers=1)]) == to_csv([run(s, workers=3)])


@pytest.mark.parametrize("algo,metric", [("a_walk", "moves"), ("a_natural", "queries"), ("a_loop", "queries"),
                                         ("pf", "moves")])
def test_mean_within_3_sigma_of_oracle(algo, metric):
    s = ExperimentSpec("complete:branching=2,depth=2", algo, q=0.4, trials=40_000, seed=2,
                       metrics=(metric,), lam=0.75 if algo == "pf" else None)
    exact = float(exact_expected_cost(s.build_tree(), s.build_noise(), algo, metric, lam=0.75))
    r = run(s)
    assert abs(r.mean(metric) - exact) <= 3 * r.stderr(metric)


def test_stderr_honesty_across_trial_counts():
    base = dict(tree="regular:delta=4,depth=5,implicit=1", algo="a_walk", q=0.1, metrics=("moves",))
    rows = [run(ExperimentSpec(**base, trials=n, seed=i)) for i, n in enumerate((1000, 10_000, 100_000))]
    for a in rows:
        for b in rows:
            se = math.hypot(a.stderr("moves"), b.stderr("moves"))
            assert abs(a.mean("moves") - b.mean("moves")) <= 3 * se


@pytest.mark.parametrize("kw", [dict(trials=0), dict(algo="teleport"), dict(lam=0.5),
                                dict(algo="a_sep", metrics=("moves",)), dict(algo="pf", metrics=("queries",)),
                                dict(kappa1=2.0), dict(epsilon=1.5), dict(cap=0)])
def test_invalid_specs(kw):
    base = dict(tree="path:length=3", algo="a_walk")
    with pytest.raises(InvalidSpec):
        ExperimentSpec(**{**base, **kw})


def test_budget_exceeded_is_reported():
    with pytest.raises(InvalidSpec):
        run(ExperimentSpec("complete:branching=10,depth=9", "a_walk", trials=1))


def test_sweep_shapes():
    base = ExperimentSpec("complete:branching=2,depth=3", "a_walk", trials=20)
    assert sweep("q", [], base) == []
    rows = sweep("q", [0.0, 0.1, 0.2, 0.3, 0.4], base)
    assert [r.spec.q for r in rows] == [0.0, 0.1, 0.2, 0.3, 0.4]
    rows = sweep("tree.depth", [2, 4], base)
    assert [r.mean("moves") for r in rows] == [2, 4]


def test_csv_layout_and_jsonl():
    r = run(ExperimentSpec("path:length=3", "pf", q=0.0, lam=1.0, trials=5, name="p"))
    text = to_csv([r])
    head, row = text.strip().split("\n")
    assert head.split(",") == csv_header()
    assert "wall_time" not in head
    assert "wall_time" in to_csv([r], include_wall_time=True)
    assert row.startswith("p,path:length=3,pf,random,0.0,")
    assert '"moves": {"mean": 3.0' in to_jsonl([r])


def test_ini_config(tmp_path):
    f = tmp_path / "exp.ini"
    f.write_text("[DEFAULT]\ntrials = 30\nseed = 5\n\n[walk]\ntree = complete:branching=2,depth=3\n"
                 "algo = a_walk\nq = 0.2\n\n[follow]\ntree = path:length=4\nalgo = pf\nlam = 0.5\n"
                 "metrics = moves\n")
    specs = load_specs(str(f))
    assert [s.name for s in specs] == ["walk", "follow"]
    assert specs[0].trials == 30 and specs[1].lam == 0.5
    with pytest.raises(InvalidSpec):
        load_specs("[x]\ntree = path:length=2\nalgo = a_walk\ncolour = red\n")


def test_threshold_report_noiseless_and_growth():
    rep = verify_threshold(deltas=(4,), depths=(3, 5), q_below=0.0, above_delta=4, above_q=0.5,
                           above_depths=(2, 3, 4), trials=20, above_trials=400)
    assert rep.below_ratios[4] == [pytest.approx(1 / 2)] * 2
    assert rep.below_spread[4] == pytest.approx(1)
    assert rep.above_exact_factor > 1
    assert "below threshold" in rep.summary()
    assert growth_factor([1, 2, 3], [3, 9, 27]) == pytest.approx(3)


@pytest.mark.xfail(strict=True, reason="q=0.8/√9 lies far above the star-condition cap; the ratio grows about 20x "
                                       "over d∈{4..10} (see decisions ledger)")
def test_threshold_example_at_inverse_sqrt_noise():
    rep = verify_threshold(deltas=(9,), depths=range(4, 11), q_below=0.8 / 3, above_depths=(2, 3),
                           trials=500, above_trials=50)
    assert rep.below_spread[9] <= 2


def test_threshold_below_side_with_star_noise():
    rep = verify_threshold(deltas=(9,), depths=range(4, 11), q_frac=0.8, eps=0.05, above_depths=(2, 3),
                           trials=2000, above_trials=50)
    assert rep.below_pass
