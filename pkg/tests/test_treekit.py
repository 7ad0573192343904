import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noisytree import _kernels as K
from noisytree.errors import BudgetExceeded, TreeFormatError
from noisytree.treekit import (TreeTopology, beta, build_caterpillar, build_complete_ary, build_heap_ary,
                               build_path, build_star, build_trimmed_ary, centroid_decomposition,
                               from_parents, generate, parse, path, serialize, subtree_sizes, theta,
                               weighted_sums_check)

from conftest import small_trees


def test_complete_sizes_and_degrees():
    t = build_complete_ary(2, 3, 3)
    assert t.n == 15
    assert t.degree[0] == 2
    assert t.degree[1] == 3
    assert t.depth[t.treasure] == 3
    assert build_complete_ary(2, 3, 3, root_children=3).n == 1 + 3 + 6 + 12


def test_leftmost_and_rightmost_placement():
    left = build_complete_ary(3, 2, 2)
    right = build_complete_ary(3, 2, 2, placement="rightmost")
    assert left.treasure == min(left.leaves())
    assert right.treasure == max(right.leaves())


def test_beta_theta_on_binary_depth2():
    t = build_complete_ary(2, 2, 2)
    assert beta(t, t.treasure) == 6
    assert theta(t, t.treasure) == pytest.approx(0.25)
    assert beta(t, 0) == 1


def test_budget_error():
    with pytest.raises(BudgetExceeded):
        build_complete_ary(10, 8, 8, budget=1000)


def test_caterpillar_trimmed_star_heap_counts():
    cat = build_caterpillar(3, 3, 2)
    assert cat.n == 4 + 2 * 1 + 2 * 2  # end spine nodes take two leaves, inner ones one
    assert cat.depth[cat.treasure] == 2
    trimmed = build_trimmed_ary(3, 3, root_children=4)
    assert trimmed.treasure == 1 and trimmed.is_leaf(1)
    assert trimmed.n == 1 + 4 + 3 * 3 + 3 * 9
    star = build_star(5)
    assert star.n == 6 and star.degree[0] == 5
    heap = build_heap_ary(3, 20)
    assert heap.n == 20 and heap.treasure == 19


def test_path_segments(path3):
    t = build_path(4)
    p = path(t, 0, 4)
    assert list(p.nodes) == [0, 1, 2, 3, 4]
    assert list(path(t, 0, 4, include_start=False, include_end=False).nodes) == [1, 2, 3]
    assert list(path(t, 4, 1).nodes) == [4, 3, 2, 1]


@given(small_trees())
def test_path_endpoints_and_length(t):
    rng = np.random.default_rng(t.n)
    u, v = (int(x) for x in rng.integers(0, t.n, 2))
    nodes = list(path(t, u, v).nodes)
    assert nodes[0] == u and nodes[-1] == v
    assert len(nodes) == t.distance(u, v) + 1
    for a, b in zip(nodes, nodes[1:]):
        assert b in t.neighbors(a)


@given(small_trees())
def test_next_hop_reaches_target(t):
    u = t.n - 1
    steps = 0
    while u != t.treasure:
        u = t.next_hop(u, t.treasure)
        steps += 1
    assert steps == t.distance(t.n - 1, t.treasure)


@given(small_trees(max_n=30))
def test_serialize_round_trip(t):
    assert parse(serialize(t)) == t


def test_parse_swaps_nonzero_root():
    t = parse("3 2 0\n0 2\n1 2\n")
    assert t.parent[0] == -1
    assert t.treasure == 2  # old node 0 now carries id 2
    assert sorted(t.children(0)) == [1, 2]


@pytest.mark.parametrize("text", ["", "3 0\n", "3 0 1\n1 0\n", "2 0 1\n1 5\n", "3 0 1\n1 0\n1 0\n"])
def test_parse_rejects(text):
    with pytest.raises(TreeFormatError):
        parse(text)


def test_tree_rejects_bad_parent():
    with pytest.raises(TreeFormatError):
        TreeTopology(np.array([0, 0]), 0)


def test_weighted_sums_on_binary():
    # direct sum: root 1, two children at c/2, four leaves at c²/6
    t = build_complete_ary(2, 2, 2)
    s1, s2 = weighted_sums_check(t, 0.5)
    assert s1 == pytest.approx(1 + 2 * 0.25 + 4 * 0.25 / 6)
    assert s2 == pytest.approx(2 * 0.25 + 2 * 4 * 0.25 / 6)
    assert weighted_sums_check(t, 1e-9)[0] == pytest.approx(1)
    with pytest.raises(ValueError):
        weighted_sums_check(t, 1.0)


@given(small_trees(max_n=40), st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9, 0.99]))
def test_weighted_sums_bounds(t, c):
    s1, s2 = weighted_sums_check(t, c)
    assert s1 <= 1 / (1 - c) + 1e-9
    assert s2 <= c / (1 - c) ** 2 + 1e-9


@given(small_trees(max_n=40))
def test_inverse_beta_below_theta(t):
    for u in range(1, t.n):
        assert 1 / beta(t, u) <= theta(t, u) + 1e-12 <= 1 + 1e-12


@given(small_trees(max_n=40))
def test_centroid_components_halve(t):
    seps = centroid_decomposition(t)
    assert sorted(set(seps.level.tolist()) - {-1}) == list(range(seps.depth + 1))
    for c in range(t.n):
        size = seps.component(c).size
        parent = seps.sep_parent[c]
        if parent >= 0:
            assert size <= seps.component(parent).size // 2
        assert c in seps.component(c)
    assert seps.depth <= math.floor(math.log2(t.n))


@given(small_trees())
def test_subtree_sizes_sum(t):
    size = subtree_sizes(t)
    assert size[0] == t.n
    for u in range(t.n):
        assert size[u] == 1 + sum(size[c] for c in t.children(u))


@pytest.mark.parametrize("desc", ["complete:branching=3,depth=4,treasure_depth=2",
                                  "regular:delta=4,depth=3,placement=rightmost",
                                  "complete:branching=2,depth=5,root_children=3"])
def test_implicit_matches_materialized(desc):
    imp = generate(desc + ",implicit=1")
    exp = generate(desc)
    mat = imp.materialize()
    assert mat == exp
    T1, T2 = imp.kernel_view(), exp.kernel_view()
    for u in range(exp.n):
        d = int(exp.depth[u])
        assert K.t_depth(T1, u) == d
        assert K.t_parent(T1, u, d) == exp.parent[u]
        assert K.t_degree(T1, u, d) == exp.degree[u]
        assert K.t_leafcount(T1, u, d) == K.t_leafcount(T2, u, d)
        assert K.t_correct(T1, u, d) == K.t_correct(T2, u, d)
        assert [K.t_child(T1, u, d, i) for i in range(K.t_nchild(T1, u, d))] == list(exp.children(u))


def test_generate_rejects_unknown():
    with pytest.raises(ValueError):
        generate("hexagon:n=3")
    with pytest.raises(ValueError):
        generate("complete:depth=3")


def test_from_parents_relabels_bfs():
    t = from_parents(np.array([-1, 2, 0, 0]), 1)
    assert list(t.order) == list(range(t.n))
    assert t.depth[t.treasure] == 2
