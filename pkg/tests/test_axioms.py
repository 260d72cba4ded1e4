import json

import numpy as np
import pytest

from icluster.axioms import (
    METHODS,
    NodeMap,
    check_axiom_transformation,
    check_axiom_value,
    check_cross_pair_bound,
    check_extreme_alpha,
    check_min_separation,
    check_sandwich,
    check_ultrametric,
    generate_reducing_map,
    is_alpha_distance_reducing,
    quotient_space,
    random_space,
    resolution_quotient,
    run_suite,
    scaled_space,
    two_node_projection,
)
from icluster.chains import minimax_closure
from icluster.core import IntervalMetricSpace, from_metric, prepared, two_node_space
from icluster.methods import (
    UltrametricSpace,
    alpha_separation,
    cluster_and_combine,
    combine_and_cluster,
    combine_bounds,
    single_linkage,
)
from icluster.rng import SplitMix64


def strict_gap_fixture():
    return IntervalMetricSpace(("a", "b", "c"),
                               [[0, 1, 2], [1, 0, 1], [2, 1, 0]],
                               [[0, 10, 2], [10, 0, 1], [2, 1, 0]])


def test_method_outputs_are_ultrametrics():
    rng = SplitMix64(101)
    for _ in range(20):
        space = random_space(rng, 7)
        a = rng.random()
        for method in METHODS.values():
            assert check_ultrametric(method(space, a)).passed


def test_check_ultrametric_reports_triangle_witness():
    res = check_ultrametric([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    assert not res.passed
    kinds = {(w[0], w[1]) for w in res.witnesses}
    assert ("strong_triangle", (0, 1, 2)) in kinds


def test_check_ultrametric_reports_structure_witnesses():
    res = check_ultrametric([[1.0, -1.0], [2.0, 0.0]])
    kinds = {w[0] for w in res.witnesses}
    assert {"diagonal", "symmetry", "positivity"} <= kinds


def test_identity_map_is_reducing():
    space = random_space(SplitMix64(5), 5)
    phi = NodeMap({x: x for x in space.labels})
    assert is_alpha_distance_reducing(space, space, phi, 0.7).passed


def test_uniform_triangle_target_is_reducing():
    # 3-node source with per-edge bounds (1,2), (2,3), (2,3); target is the
    # uniform triangle with bounds (1/2, 1) everywhere
    source = IntervalMetricSpace(("x1", "x2", "x3"),
                                 [[0, 1, 2], [1, 0, 2], [2, 2, 0]],
                                 [[0, 2, 3], [2, 0, 3], [3, 3, 0]])
    half = 0.5
    target = IntervalMetricSpace(("y1", "y2", "y3"),
                                 [[0, half, half], [half, 0, half], [half, half, 0]],
                                 [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    phi = NodeMap({"x1": "y1", "x2": "y2", "x3": "y3"})
    assert is_alpha_distance_reducing(source, target, phi, 0.5).passed


def test_collapsing_map_is_reducing():
    source = two_node_space(1, 7)
    target, phi = quotient_space(source, [["p", "q"]])
    assert target.n == 1
    assert is_alpha_distance_reducing(source, target, phi, 0.3).passed


def test_non_total_map_rejected():
    space = random_space(SplitMix64(7), 3)
    other = random_space(SplitMix64(8), 3)
    with pytest.raises(ValueError):
        is_alpha_distance_reducing(space, other, NodeMap({space.labels[0]: other.labels[0]}), 0.5)
    with pytest.raises(ValueError):
        is_alpha_distance_reducing(space, other,
                                   NodeMap({x: "nope" for x in space.labels}), 0.5)


def test_expanding_map_fails_checker():
    small = two_node_space(1, 2)
    big = two_node_space(5, 9)
    phi = NodeMap({"p": "p", "q": "q"})
    res = is_alpha_distance_reducing(small, big, phi, 0.5)
    assert not res.passed
    assert any(w[0] == "bounds" for w in res.witnesses)


def test_check_axiom_value_cases():
    assert check_axiom_value(combine_and_cluster, 1, 7, 0.5).passed
    for a in (0.0, 0.33, 1.0):
        assert check_axiom_value(cluster_and_combine, 2, 2, a).passed

    def sl_upper(space, alpha):
        sp = prepared(space)
        return single_linkage(sp.labels, sp.upper)

    res = check_axiom_value(sl_upper, 1, 7, 0.5)  # negative control: 7 != 4
    assert not res.passed


def test_check_axiom_transformation_collapse_and_scaling():
    rng = SplitMix64(11)
    space = random_space(rng, 6)
    target, phi = quotient_space(space, [list(space.labels[:3])])
    for method in METHODS.values():
        assert check_axiom_transformation(method, space, target, phi, 0.4).passed
    scaled, ident = scaled_space(space, 0.5)
    for method in METHODS.values():
        assert check_axiom_transformation(method, space, scaled, ident, 0.4).passed


def test_check_axiom_transformation_identity_zero_margin():
    space = random_space(SplitMix64(13), 4)
    phi = NodeMap({x: x for x in space.labels})
    res = check_axiom_transformation(combine_and_cluster, space, space, phi, 0.6)
    assert res.passed and not res.vacuous


def test_check_axiom_transformation_vacuous_flag():
    small = two_node_space(1, 2)
    big = two_node_space(5, 9)
    phi = NodeMap({"p": "p", "q": "q"})
    res = check_axiom_transformation(combine_and_cluster, small, big, phi, 0.5)
    assert res.passed and res.vacuous


def test_check_min_separation_on_randoms_and_two_node():
    rng = SplitMix64(17)
    for _ in range(30):
        space = random_space(rng, 8)
        a = rng.random()
        for method in METHODS.values():
            assert check_min_separation(method, space, a).passed
    space = two_node_space(1, 7)
    for method in METHODS.values():
        u = method(space, 0.25).u[0, 1]
        assert u == alpha_separation(space, 0.25)


def test_min_separation_negative_control():
    def halved(space, alpha):
        u = cluster_and_combine(space, alpha)
        return UltrametricSpace(u.labels, u.u * 0.5)

    space = random_space(SplitMix64(19), 5)
    assert not check_min_separation(halved, space, 0.5).passed


def test_check_sandwich_fixture_gap():
    res = check_sandwich(strict_gap_fixture(), 0.5)
    assert res.passed
    assert res.stats["max_gap"] == 0.5
    assert tuple(res.stats["max_gap_pair"]) == (0, 1)


def test_check_sandwich_degenerate_and_endpoints():
    space = from_metric(("a", "b", "c"), [[0, 1, 2], [1, 0, 3], [2, 3, 0]])
    for a in (0.0, 0.3, 1.0):
        res = check_sandwich(space, a)
        assert res.passed and res.stats["max_gap"] == 0.0
    rng = SplitMix64(23)
    for _ in range(10):
        gen = random_space(rng, 6)
        for a in (0.0, 1.0):
            res = check_sandwich(gen, a)
            assert res.passed and res.stats["max_gap"] == 0.0


def test_check_extreme_alpha():
    rng = SplitMix64(29)
    for _ in range(20):
        assert check_extreme_alpha(random_space(rng, 6)).passed
    space = two_node_space(1, 7)
    assert combine_and_cluster(space, 1.0).u[0, 1] == 7.0
    assert combine_and_cluster(space, 0.0).u[0, 1] == 1.0
    degenerate = from_metric(("a", "b"), [[0, 2], [2, 0]])
    assert check_extreme_alpha(degenerate).passed


def test_generated_maps_are_sound():
    rng = SplitMix64(31)
    for k in range(60):
        space = random_space(rng, 2 + k % 7)
        a = rng.random()
        kind = ("scale", "quotient", "two_node")[k % 3]
        target, phi = generate_reducing_map(space, a, rng.next_u64(), kind=kind)
        assert is_alpha_distance_reducing(space, target, phi, a).passed


def test_two_node_projection_bounds_are_separation_chain_costs():
    rng = SplitMix64(37)
    space = random_space(rng, 6)
    a = 0.4
    target, phi = two_node_projection(space, a, rng)
    cu = minimax_closure(space.upper)
    cl = minimax_closure(space.lower)
    chat = combine_bounds(cl, cu, a)
    off = ~np.eye(6, dtype=bool)
    i, j = np.unravel_index(np.where(off, chat, np.inf).argmin(), chat.shape)
    assert target.lower[0, 1] == cl[i, j]
    assert target.upper[0, 1] == cu[i, j]
    assert sorted(set(phi.mapping.values())) == ["p", "q"]


def test_resolution_quotient_at_median_is_reducing():
    rng = SplitMix64(41)
    for _ in range(10):
        space = random_space(rng, 6)
        a = rng.random()
        u = cluster_and_combine(space, a).u
        off = ~np.eye(6, dtype=bool)
        delta = float(np.median(u[off]))
        target, phi = resolution_quotient(space, a, delta)
        assert is_alpha_distance_reducing(space, target, phi, a).passed


def test_quotient_rejects_bad_groups():
    space = random_space(SplitMix64(43), 4)
    with pytest.raises(ValueError):
        quotient_space(space, [["x0", "x1"], ["x1", "x2"]])
    with pytest.raises(ValueError):
        quotient_space(space, [["nope"]])


def test_cross_pair_bound_on_random_quadruples():
    rng = SplitMix64(47)
    for _ in range(200):
        space = random_space(rng, 4)
        assert check_cross_pair_bound(space, rng.random()).passed


def test_cross_pair_bound_requires_four_nodes():
    with pytest.raises(ValueError):
        check_cross_pair_bound(random_space(SplitMix64(53), 3), 0.5)


def test_run_suite_all_passes_and_serializes():
    report = run_suite("all", instances=12, seed=99)
    assert report["passed"]
    parsed = json.loads(json.dumps(report))
    assert {r["suite"] for r in parsed["suites"]} == {
        "ultrametric", "value", "transform", "separation", "sandwich", "extremes"}


def test_run_suite_unknown_name():
    with pytest.raises(ValueError):
        run_suite("nonsense", 3, 1)


def test_run_suite_instance_seeds_are_stable():
    a = run_suite("sandwich", instances=6, seed=5)
    b = run_suite("sandwich", instances=6, seed=5)
    assert a == b
