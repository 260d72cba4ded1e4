import numpy as np
import pytest

from icluster.axioms import random_space
from icluster.chains import brute_force_minimax, minimax_closure
from icluster.core import IntervalMetricSpace, from_metric, two_node_space
from icluster.methods import (
    alpha_separation,
    cluster_and_combine,
    combine_and_cluster,
    combine_bounds,
    combined_dissimilarity,
    separation_metric,
    single_linkage,
)
from icluster.rng import SplitMix64

ALPHA_GRID = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def strict_gap_fixture() -> IntervalMetricSpace:
    return IntervalMetricSpace(("a", "b", "c"),
                               [[0, 1, 2], [1, 0, 1], [2, 1, 0]],
                               [[0, 10, 2], [10, 0, 1], [2, 1, 0]])


def three_edge_bounds_space() -> IntervalMetricSpace:
    # 3-node space: bounds (1,2), (2,3), (2,3) on the three edges
    return IntervalMetricSpace(("x1", "x2", "x3"),
                               [[0, 1, 2], [1, 0, 2], [2, 2, 0]],
                               [[0, 2, 3], [2, 0, 3], [3, 3, 0]])


def test_single_linkage_two_node():
    u = single_linkage(("p", "q"), [[0, 3], [3, 0]])
    assert u.u[0, 1] == 3.0


def test_single_linkage_chain_graph():
    d = np.array([[0.0, 1.0, 9.0], [1.0, 0.0, 2.0], [9.0, 2.0, 0.0]])
    u = single_linkage(("1", "2", "3"), d)
    assert u.u[0, 2] == 2.0  # frozen from brute_force_minimax
    assert u.u[0, 2] == brute_force_minimax(d, 0, 2)


def test_single_linkage_fixed_point():
    u = np.array([[0.0, 2.0, 2.0], [2.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    assert np.array_equal(single_linkage(("a", "b", "c"), u).u, u)


def test_single_linkage_rejects_nonpositive_offdiagonal():
    with pytest.raises(ValueError):
        single_linkage(("a", "b"), [[0, 0], [0, 0]])


def test_combined_dissimilarity_midpoint():
    cd = combined_dissimilarity(two_node_space(1, 7), 0.5)
    assert cd.matrix[0, 1] == 4.0
    assert cd.alpha == 0.5 and cd.kind == "bounds"


def test_combined_dissimilarity_endpoints_exact():
    space = random_space(SplitMix64(5), 6)
    assert np.array_equal(combined_dissimilarity(space, 1.0).matrix, space.upper)
    assert np.array_equal(combined_dissimilarity(space, 0.0).matrix, space.lower)


def test_combine_bounds_degenerate_shortcut():
    d = np.array([[0.0, 0.3], [0.3, 0.0]])
    for alpha in ALPHA_GRID:
        assert np.array_equal(combine_bounds(d, d, alpha), d)


def test_co_two_node_value():
    assert combine_and_cluster(two_node_space(1, 7), 0.5).u[0, 1] == 4.0


def test_cl_two_node_value():
    assert cluster_and_combine(two_node_space(1, 7), 0.5).u[0, 1] == 4.0


def test_axiom_value_exact_on_random_pairs():
    rng = SplitMix64(41)
    for _ in range(100):
        dl = rng.uniform(0.1, 5.0)
        du = dl + rng.uniform(0.0, 5.0)
        a = rng.random()
        expected = a * du + (1.0 - a) * dl
        space = two_node_space(dl, du)
        for method in (combine_and_cluster, cluster_and_combine):
            got = method(space, a).u[0, 1]
            assert abs(got - expected) <= 1e-15 * expected


def test_strict_gap_fixture_values():
    space = strict_gap_fixture()
    co = combine_and_cluster(space, 0.5)
    cl = cluster_and_combine(space, 0.5)
    # frozen via the chain-enumeration oracle on the blended matrices
    assert co.u[0, 1] == 2.0
    assert cl.u[0, 1] == 1.5
    assert co.u[0, 1] - cl.u[0, 1] == 0.5
    dhat = combined_dissimilarity(space, 0.5).matrix
    assert co.u[0, 1] == brute_force_minimax(dhat, 0, 1)


def test_three_node_blend_values():
    # frozen oracle values for the blended matrix at weight 0.5
    u = combine_and_cluster(three_edge_bounds_space(), 0.5)
    assert u.u[0, 1] == 1.5
    assert u.u[1, 2] == 2.5
    assert u.u[0, 2] == 2.5


def test_degenerate_space_collapses_for_every_alpha():
    d = [[0, 1, 2], [1, 0, 3], [2, 3, 0]]
    space = from_metric(("a", "b", "c"), d)
    sl = minimax_closure(np.asarray(d, dtype=float))
    for alpha in ALPHA_GRID:
        assert np.array_equal(combine_and_cluster(space, alpha).u, sl)
        assert np.array_equal(cluster_and_combine(space, alpha).u, sl)


def test_extreme_alpha_collapse_exact():
    rng = SplitMix64(43)
    for _ in range(20):
        space = random_space(rng, 7)
        sl_upper = minimax_closure(space.upper)
        sl_lower = minimax_closure(space.lower)
        for method in (combine_and_cluster, cluster_and_combine):
            assert np.array_equal(method(space, 1.0).u, sl_upper)
            assert np.array_equal(method(space, 0.0).u, sl_lower)


def test_sandwich_and_envelope():
    rng = SplitMix64(47)
    for _ in range(30):
        space = random_space(rng, 8)
        sl_lower = minimax_closure(space.lower)
        sl_upper = minimax_closure(space.upper)
        for alpha in (0.25, 0.5, 0.9):
            co = combine_and_cluster(space, alpha).u
            cl = cluster_and_combine(space, alpha).u
            assert (cl <= co + 1e-12).all()
            assert (sl_lower <= cl + 1e-12).all()
            assert (co <= sl_upper + 1e-12).all()


def test_alpha_monotonicity():
    rng = SplitMix64(53)
    for _ in range(10):
        space = random_space(rng, 6)
        for method in (combine_and_cluster, cluster_and_combine):
            prev = None
            for alpha in ALPHA_GRID:
                u = method(space, alpha).u
                if prev is not None:
                    assert (prev <= u + 1e-12).all()
                prev = u


def test_alpha_separation_two_node():
    assert alpha_separation(two_node_space(1, 7), 0.25) == 0.25 * 7 + 0.75 * 1


def test_alpha_separation_degenerate_equals_min_distance():
    d = [[0, 1, 5], [1, 0, 3], [5, 3, 0]]
    space = from_metric(("a", "b", "c"), d)
    for alpha in ALPHA_GRID:
        assert alpha_separation(space, alpha) == 1.0


def test_alpha_separation_equals_min_of_minimal_method():
    rng = SplitMix64(59)
    for _ in range(10):
        space = random_space(rng, 6)
        a = rng.random()
        u = cluster_and_combine(space, a).u
        off = ~np.eye(6, dtype=bool)
        assert alpha_separation(space, a) == u[off].min()


def test_alpha_separation_needs_two_nodes():
    space = IntervalMetricSpace(("a",), [[0.0]], [[0.0]])
    with pytest.raises(ValueError):
        alpha_separation(space, 0.5)


def test_min_separation_property():
    rng = SplitMix64(61)
    for _ in range(30):
        space = random_space(rng, 7)
        a = rng.random()
        sep = alpha_separation(space, a)
        off = ~np.eye(7, dtype=bool)
        for method in (combine_and_cluster, cluster_and_combine):
            assert method(space, a).u[off].min() >= sep - 1e-12


def test_separation_metric_values():
    assert separation_metric(("a", "b"), [[0, 2], [2, 0]]) == 2.0
    assert separation_metric(("a", "b", "c"), [[0, 1, 5], [1, 0, 3], [5, 3, 0]]) == 1.0


def test_separation_metric_chain_form_equivalence():
    rng = SplitMix64(67)
    for _ in range(20):
        space = random_space(rng, 6)
        d = space.lower
        off = ~np.eye(6, dtype=bool)
        assert separation_metric(space.labels, d) == minimax_closure(d)[off].min()


def test_methods_accept_and_clamp_zero_lower_bounds():
    space = IntervalMetricSpace(("a", "b"), [[0, 0], [0, 0]], [[0, 2], [2, 0]])
    u = cluster_and_combine(space, 0.0)
    assert u.u[0, 1] == 1e-12  # clamped, strictly positive
    assert combine_and_cluster(space, 1.0).u[0, 1] == 2.0


def test_invalid_alpha_rejected():
    space = two_node_space(1, 2)
    for bad in (-0.01, 1.01):
        with pytest.raises(ValueError):
            combine_and_cluster(space, bad)
