import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from foxweave.complex_builder import InvariantViolation
from foxweave.fn_core import MonotoneMap, classify_pair, coface, enumerate_trees, delta_codegeneracy, is_exceptional, parse_tree, trivial_tree
from foxweave.geometry import (
    EPS_ALGEBRA,
    INF,
    Configuration,
    GeometryError,
    KontsTensor,
    NoStratum,
    WeightedChain,
    approximate,
    bz_vertex,
    check_stratum,
    coface_doubling_direction,
    collapse_direction,
    config_from_chain,
    config_from_tree,
    geometry_suite,
    konts_coface,
    konts_point,
    pair_difference,
    random_stratum,
    random_tensor,
    random_tree,
    random_weighted_chain,
    random_weights,
    raw_tensor,
    records_to_csv,
    stratum_of,
    tau_tensor,
    walking_direction,
)

FIG1 = parse_tree("3<2 1<1 2<0 5<1 4", 3)
E = np.eye(3)


def T(text, m=2):
    return parse_tree(text, m)


# ------------------------------------------------------------ configurations


def test_config_from_tree_example():
    w1, w2 = 0.7, 2.5
    c = config_from_tree(T("1<0 3<1 2"), (w1, w2))
    assert np.array_equal(c.point(1), [0, 0])
    assert np.allclose(c.point(3), [w1, 0])
    assert np.allclose(c.point(2), [w1, w2])


def test_single_leaf_configuration():
    c = config_from_tree(T("1"), ())
    assert c.points.tolist() == [[0.0, 0.0]]
    assert c.min_separation() == INF


def test_bz_vertex_is_unit_weights():
    v = bz_vertex(FIG1)
    # 3 at 0, then +e3, +e2, +e1, +e2 along positions
    assert v.point(3).tolist() == [0, 0, 0]
    assert v.point(1).tolist() == [0, 0, 1]
    assert v.point(2).tolist() == [0, 1, 1]
    assert v.point(5).tolist() == [1, 1, 1]
    assert v.point(4).tolist() == [1, 2, 1]
    assert stratum_of(v) == FIG1


@pytest.mark.parametrize("theta", [(0.0, 1.0), (-1.0, 1.0), (INF, 1.0)])
def test_config_from_tree_rejects_bad_weights(theta):
    with pytest.raises(GeometryError):
        config_from_tree(T("1<0 3<1 2"), theta)


def test_configuration_json_round_trip():
    c = config_from_tree(FIG1, (0.5, 1.5, 2.0, 3.0))
    back = Configuration.from_json(c.to_json())
    assert np.array_equal(back.points, c.points)
    with pytest.raises(ValueError):
        c.points[0, 0] = 1.0


# -------------------------------------------------------------- stratum_of


def test_collinear_points_have_depth_zero():
    pts = np.array([[3.0, 0], [1.0, 0], [2.0, 0]])
    assert stratum_of(Configuration(pts)) == T("2<0 3<0 1")


def test_stratum_of_rejects_coincident_and_ambiguous():
    with pytest.raises(GeometryError):
        stratum_of(Configuration(np.array([[0.0, 0.0], [0.0, 0.0]])))
    with pytest.raises(GeometryError):
        stratum_of(Configuration(np.array([[0.0, 0.0], [1e-8, 1.0]])))


@pytest.mark.parametrize("m", [2, 3])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_round_trip_sampled(m, n):
    rng = np.random.default_rng([11, m, n])
    for _ in range(200):
        tree = random_tree(rng, m, n)
        theta = random_weights(rng, n - 1)
        assert stratum_of(config_from_tree(tree, theta)) == tree


def test_round_trip_exhaustive_unit_weights():
    for m, n in [(2, 3), (3, 3), (2, 4)]:
        for tree in enumerate_trees(m, n):
            assert stratum_of(bz_vertex(tree)) == tree


# ------------------------------------------------------------- weighted chains


def test_convex_sum_example():
    chain = WeightedChain((T("1<0 2"), T("1<1 2")), (0.5, 0.5), ((1.0,), (1.0,)))
    c = config_from_chain(chain)
    assert np.array_equal(c.point(1), [0, 0])
    assert np.allclose(c.point(2), [0.5, 0.5])


def test_single_tree_chain_matches_tree():
    theta = (0.5, 1.5, 2.0, 3.0)
    assert np.array_equal(
        config_from_chain(WeightedChain.single(FIG1, theta)).points, config_from_tree(FIG1, theta).points
    )


def test_summand_order_does_not_matter():
    rng = np.random.default_rng(3)
    for _ in range(50):
        chain = random_weighted_chain(rng, 3, 4)
        direct = sum(c * config_from_tree(t, w).points for t, c, w in zip(chain.trees, chain.coefficients, chain.weights))
        rev = sum(
            c * config_from_tree(t, w).points
            for t, c, w in reversed(list(zip(chain.trees, chain.coefficients, chain.weights)))
        )
        assert np.allclose(config_from_chain(chain).points, direct, atol=1e-12)
        assert np.allclose(direct, rev, atol=1e-12)


def test_weighted_chain_validation():
    a, b = T("1<0 2"), T("1<1 2")
    with pytest.raises(GeometryError):
        WeightedChain((b, a), (0.5, 0.5), ((1.0,), (1.0,)))
    with pytest.raises(GeometryError):
        WeightedChain((a, b), (0.7, 0.7), ((1.0,), (1.0,)))
    with pytest.raises(GeometryError):
        WeightedChain((a,), (1.0,), ((0.0,),))
    # extended: zero allowed on a hair, not on a depth-0 edge
    WeightedChain((b,), (1.0,), ((0.0,),), extended=True)
    with pytest.raises(GeometryError):
        WeightedChain((a,), (1.0,), ((0.0,),), extended=True)
    # infinity only inside the extremal blocks
    WeightedChain((b,), (1.0,), ((INF,),), extended=True)
    with pytest.raises(GeometryError):
        WeightedChain((T("2<1 1<0 3"),), (1.0,), ((INF, 1.0),), extended=True)


def test_weighted_chain_json_round_trip():
    chain = WeightedChain((T("1<1 2"),), (1.0,), ((INF,),), extended=True)
    text = chain.to_json()
    assert '"inf"' in text
    assert WeightedChain.from_json(text) == chain


def test_coincident_convex_sum_is_an_invariant_violation():
    # 1<0 2 and 2<0 1 are incomparable, so build the coincidence by hand
    with pytest.raises(InvariantViolation):
        config_from_chain(WeightedChain((T("1<0 2"),), (1.0,), ((1e-12,),)))


# --------------------------------------------------------------- walking man


def test_walking_man_adjacent_labels():
    theta = (0.5, 1.5, 2.0, 3.0)
    chain = WeightedChain.single(FIG1, theta)
    # 3 and 1 are adjacent with depth 2
    assert np.allclose(pair_difference(chain, 3, 1), 0.5 * E[2])


def test_walking_man_figure_path():
    w = (0.5, 1.5, 2.0, 3.0)
    chain = WeightedChain.single(FIG1, w)
    expected = w[1] * E[1] + w[2] * E[0] + w[3] * E[1]
    assert np.allclose(pair_difference(chain, 1, 4), expected)
    assert np.allclose(pair_difference(chain, 4, 1), -expected)


def test_walking_man_rejects_equal_labels():
    with pytest.raises(GeometryError):
        pair_difference(WeightedChain.single(FIG1, (1, 1, 1, 1)), 2, 2)


@pytest.mark.parametrize("m", [2, 3])
def test_walking_man_matches_subtraction(m):
    rng = np.random.default_rng([5, m])
    for _ in range(300):
        n = int(rng.integers(2, 6))
        chain = random_weighted_chain(rng, m, n)
        conf = config_from_chain(chain)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j:
                    diff = pair_difference(chain, i, j) - (conf.point(j) - conf.point(i))
                    assert np.max(np.abs(diff)) <= EPS_ALGEBRA


@pytest.mark.parametrize("m", [2, 3])
def test_leading_component_positive(m):
    rng = np.random.default_rng([6, m])
    for _ in range(300):
        n = int(rng.integers(2, 6))
        chain = random_weighted_chain(rng, m, n)
        tree = chain.trees[chain.active()[0]]
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i == j or tree.position(i) > tree.position(j):
                    continue
                r = min(tree.depths[tree.position(i) - 1 : tree.position(j) - 1])
                diff = pair_difference(chain, i, j)
                assert diff[r] > 0
                assert np.all(np.abs(diff[:r]) <= EPS_ALGEBRA)


# ------------------------------------------------------------ Konts tensors


def test_konts_point_two_points():
    t = konts_point(Configuration(np.array([[0.0, 0.0], [1.0, 0.0]])))
    assert t.entry(1, 2).tolist() == [1.0, 0.0]
    assert t.entry(2, 1).tolist() == [-1.0, 0.0]
    t.check()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100), st.lists(st.floats(-50, 50), min_size=3, max_size=3))
def test_konts_point_invariant_under_scaling_and_translation(seed, scale, shift):
    rng = np.random.default_rng(seed)
    conf = config_from_chain(random_weighted_chain(rng, 3, 4))
    base = konts_point(conf)
    scaled = konts_point(Configuration(conf.points * scale))
    moved = konts_point(Configuration(conf.points + np.array(shift)))
    assert base.max_deviation(scaled) <= 1e-9
    assert base.max_deviation(moved) <= 1e-9


def test_konts_point_rejects_coincident_points():
    with pytest.raises(GeometryError):
        konts_point(Configuration(np.zeros((2, 2))))


def test_tensor_json_and_check():
    t = random_tensor(np.random.default_rng(1), 4, 3)
    t.check()
    assert KontsTensor.from_json(t.to_json()) == t
    bad = KontsTensor(np.ones((2, 2, 2)))
    with pytest.raises(InvariantViolation):
        bad.check()


def test_konts_coface_on_one_point():
    t = KontsTensor(np.zeros((1, 1, 2)))
    for u in (0, 1, 2):
        out = konts_coface(u, t)
        assert out.entry(1, 2).tolist() == collapse_direction(2).tolist()
        assert out.entry(2, 1).tolist() == (-collapse_direction(2)).tolist()
    assert konts_coface(0, t, "e1").entry(1, 2).tolist() == [1.0, 0.0]
    with pytest.raises(GeometryError):
        konts_coface(3, t)


def test_konts_coface_copies_non_exceptional_entries():
    rng = np.random.default_rng(2)
    for ell in range(1, 6):
        t = random_tensor(rng, ell, 3)
        for u in range(ell + 2):
            out = konts_coface(u, t)
            for i in range(1, ell + 2):
                for j in range(i + 1, ell + 2):
                    if not is_exceptional(u, i, j, ell):
                        a, b = delta_codegeneracy(u, i), delta_codegeneracy(u, j)
                        assert np.array_equal(out.entry(i, j), t.entry(a, b))


def test_konts_cosimplicial_identity_exhaustive():
    rng = np.random.default_rng(4)
    for ell in range(1, 6):
        t = random_tensor(rng, ell, 3)
        for j in range(1, ell + 3):
            for i in range(j):
                for collapse in ("em", "e1"):
                    lhs = konts_coface(j, konts_coface(i, t, collapse), collapse)
                    rhs = konts_coface(i, konts_coface(j - 1, t, collapse), collapse)
                    assert lhs == rhs


@pytest.mark.parametrize("m", [2, 3])
def test_doubling_a_leaf_points_along_collapse_direction(m):
    mu = collapse_direction(m)
    for n in range(1, 4):
        for tree in enumerate_trees(m, n):
            for i in range(1, n + 1):
                assert np.array_equal(coface_doubling_direction(tree, i), mu)


def test_collapse_direction_flag():
    assert collapse_direction(3).tolist() == [0, 0, 1]
    assert collapse_direction(3, "e1").tolist() == [1, 0, 0]
    with pytest.raises(GeometryError):
        collapse_direction(3, "e2")


# ----------------------------------------------------------------------- tau


@pytest.mark.parametrize("m", [2, 3])
def test_tau_agrees_with_point_map_on_plain_chains(m):
    rng = np.random.default_rng([8, m])
    for _ in range(200):
        n = int(rng.integers(1, 6))
        chain = random_weighted_chain(rng, m, n)
        assert tau_tensor(chain).max_deviation(konts_point(config_from_chain(chain))) <= 1e-9


@pytest.mark.parametrize("collapse", ["em", "e1"])
def test_tau_on_degenerate_pairs(collapse):
    rng = np.random.default_rng(12)
    mu = collapse_direction(3, collapse)
    degenerate = 0
    for _ in range(200):
        s = random_stratum(rng, 3, 2, 4)
        out = tau_tensor(s.chain, s.phi, s.D, s.source, collapse=collapse)
        out.check()
        for i in range(1, 5):
            for j in range(i + 1, 5):
                if classify_pair(s.phi, i, j).degenerate:
                    degenerate += 1
                    assert np.array_equal(out.entry(i, j), mu)
    assert degenerate > 0


def test_tau_trivial_stratum_is_constant():
    top = trivial_tree(3, 2)
    chain = WeightedChain((top,), (1.0,), ((1.0, 2.0),), extended=True)
    D = MonotoneMap((0,), 0)
    out = tau_tensor(chain, MonotoneMap.identity(3), D, (top,))
    for i in range(1, 4):
        for j in range(i + 1, 4):
            assert np.array_equal(out.entry(i, j), collapse_direction(2))


def test_tau_rejects_constraint_violations():
    chain = WeightedChain((T("1<1 2"),), (1.0,), ((1.0,),), extended=True)
    with pytest.raises(GeometryError):
        check_stratum(chain, MonotoneMap.identity(3), MonotoneMap.identity(0))
    with pytest.raises(GeometryError):
        # support of the coefficients must equal the image of D
        two = WeightedChain((T("1<0 2"), T("1<1 2")), (1.0, 0.0), ((1.0,), (1.0,)), extended=True)
        check_stratum(two, MonotoneMap.identity(2), MonotoneMap.identity(1))


def test_walking_direction_infinite_part_dominates():
    chain = WeightedChain((T("1<1 2<1 3"),), (1.0,), ((INF, 5.0),), extended=True)
    assert np.array_equal(walking_direction(chain, 1, 3), [0.0, 1.0])
    assert np.array_equal(walking_direction(chain, 3, 1), [0.0, -1.0])


@pytest.mark.parametrize("m", [2, 3])
def test_extended_weights_are_limits(m):
    rng = np.random.default_rng([9, m])
    worst, seen = 0.0, 0
    for n in range(1, 4):
        for ell in range(n, 6):
            for _ in range(20):
                try:
                    s = random_stratum(rng, m, n, ell)
                except NoStratum:
                    continue
                members = [s.D(k) for k in range(s.D.n + 1)]
                exact = tau_tensor(s.chain, s.phi, s.D, s.source)
                near = raw_tensor(approximate(s.chain), members)
                worst = max(worst, exact.max_deviation(near))
                seen += 1
    assert seen > 100
    assert worst <= 1e-3


# --------------------------------------------------------------------- suite


def test_geometry_suite_small_and_deterministic():
    a = geometry_suite(seed=7, samples=50)
    b = geometry_suite(seed=7, samples=50)
    assert records_to_csv(a) == records_to_csv(b)
    assert all(r.passed for r in a)
    assert len(a) == 4 * 10
    header = records_to_csv(a).splitlines()[0]
    assert header == "seed,check,m,n,samples,max_deviation,tolerance,passed"
