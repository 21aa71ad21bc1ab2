import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcbb.errors import NodeInfeasible
from pcbb.geometry import (
    ViableSets,
    d_max,
    d_min,
    dmax_matrix,
    dmin_matrix,
    eliminate_assignments,
    force_assignments,
    hull_tighten,
    propagate_links,
    root_region,
)
from pcbb.model import CentroidRegion, CollapsedInstance
from pcbb.oracle import brute_force_in_region


def inst_of(points, k, edges=(), weights=None):
    points = np.asarray(points, dtype=float)
    n = len(points)
    weights = [1] * n if weights is None else weights
    members, start = [], 0
    for w in weights:
        members.append(tuple(range(start, start + w)))
        start += w
    return CollapsedInstance(points, weights, tuple(members), edges, 0.0, k)


UNIT = (np.zeros(2), np.ones(2))


def test_root_region_definition():
    r = root_region(inst_of([[0, 0], [2, 4]], 2))
    np.testing.assert_array_equal(r.lower, [[0, 0], [0, 0]])
    np.testing.assert_array_equal(r.upper, [[2, 4], [2, 4]])


def test_root_region_single_and_line():
    r = root_region(inst_of([[1, 2]], 1))
    np.testing.assert_array_equal(r.widths, [[0, 0]])
    r = root_region(inst_of([[0, 3], [5, 3]], 1))
    np.testing.assert_array_equal(r.widths, [[5, 0]])


def test_d_min_examples():
    assert d_min([0.5, 0.5], UNIT) == 0.0
    assert d_min([2, 0], UNIT) == 1.0
    assert d_min([2, 3], UNIT) == 5.0


def test_d_min_against_dense_grid():
    g = np.linspace(0, 1, 1001)
    mu = np.array(list(itertools.product(g, g)))
    brute = float((((mu - [2, 3]) ** 2).sum(axis=1)).min())
    assert d_min([2, 3], UNIT) == pytest.approx(brute, abs=1e-6)


def test_d_max_examples():
    assert d_max([0, 0], UNIT) == 2.0
    assert d_max([0.5, 0.5], UNIT) == 0.5
    corners = np.array(list(itertools.product([0, 1], [0, 1])))
    assert d_max([2, 0], UNIT) == pytest.approx(float((((corners - [2, 0]) ** 2).sum(axis=1)).max()))
    assert d_max([2, 0], UNIT) == 5.0


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_distance_sandwich(d, seed):
    rng = np.random.default_rng(seed)
    lo = rng.normal(size=d)
    hi = lo + rng.uniform(0, 3, size=d)
    x = rng.normal(size=d) * 3
    mu = rng.uniform(lo, hi)
    dist = float(((x - mu) ** 2).sum())
    assert d_min(x, (lo, hi)) <= dist + 1e-12
    assert dist <= d_max(x, (lo, hi)) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_distance_monotone_under_shrinking(d, seed):
    rng = np.random.default_rng(seed)
    lo = rng.normal(size=d)
    hi = lo + rng.uniform(0, 3, size=d)
    a, b = np.sort(rng.uniform(lo, hi, size=(2, d)), axis=0)
    x = rng.normal(size=d) * 3
    assert d_min(x, (a, b)) >= d_min(x, (lo, hi)) - 1e-12
    assert d_max(x, (a, b)) <= d_max(x, (lo, hi)) + 1e-12


def test_matrices_match_scalar_versions():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(5, 3))
    lo = rng.normal(size=(2, 3))
    region = CentroidRegion(lo, lo + 1)
    for s in range(5):
        for k in range(2):
            assert dmin_matrix(X, region)[s, k] == pytest.approx(d_min(X[s], region.boxes[k]))
            assert dmax_matrix(X, region)[s, k] == pytest.approx(d_max(X[s], region.boxes[k]))


TWO = inst_of([[0, 0], [10, 0]], 2)
TWO_REGION = CentroidRegion([[0, 0], [9, -1]], [[1, 1], [11, 1]])


def test_eliminate_unbounded_incumbent_is_noop():
    v = ViableSets.full(2, 2)
    assert eliminate_assignments(v, TWO_REGION, TWO, np.inf) is v


def test_eliminate_two_sample_example():
    out = eliminate_assignments(ViableSets.full(2, 2), TWO_REGION, TWO, 2.0)
    np.testing.assert_array_equal(out.mask, [[True, False], [False, True]])


def test_eliminate_empties_mask():
    region = CentroidRegion([[5, 0], [5, 0]], [[6, 0], [6, 0]])
    with pytest.raises(NodeInfeasible):
        eliminate_assignments(ViableSets.full(2, 2), region, TWO, 2.0)
    # the grid oracle confirms nothing in the region beats the incumbent
    value, slack = brute_force_in_region(TWO, 2, region, 0.05)
    assert value - slack > 2.0


def test_paper_rho_rule_is_opt_in():
    region = CentroidRegion([[0, 0], [3, 0]], [[1, 1], [4, 1]])
    v = ViableSets.full(2, 2)
    default = eliminate_assignments(v, region, TWO, 1e9)
    assert default.mask.all()
    rho = eliminate_assignments(v, region, TWO, 1e9, paper_rho_rule=True, rho=40.0)
    np.testing.assert_array_equal(rho.mask, [[True, True], [False, True]])


def test_force_k1():
    inst = inst_of([[0, 0], [5, 5]], 1)
    out = force_assignments(ViableSets.full(2, 1), root_region(inst), inst)
    assert list(out.forced) == [0, 0]


def test_force_figure_a():
    inst = inst_of([[1, 3]], 3)
    region = CentroidRegion([[-4, 0], [0, 4], [3, 0]], [[-2, 2], [2, 5], [5, 1]])
    assert d_max([1, 3], region.boxes[1]) == 5.0
    assert d_min([1, 3], region.boxes[0]) == 10.0
    assert d_min([1, 3], region.boxes[2]) == 8.0
    out = force_assignments(ViableSets.full(1, 3), region, inst)
    assert list(out.forced) == [1]


def test_force_overlapping_boxes_no_change():
    inst = inst_of([[1, 1]], 2)
    region = CentroidRegion([[0, 0], [1.5, 0]], [[2, 2], [3, 2]])
    v = ViableSets.full(1, 2)
    assert force_assignments(v, region, inst) == v


def test_force_requires_strict_inequality():
    inst = inst_of([[0.0]], 2)
    region = CentroidRegion([[0.0], [1.0]], [[1.0], [2.0]])
    # d_max to box 0 is 1, d_min to box 1 is 1
    v = ViableSets.full(1, 2)
    assert force_assignments(v, region, inst) == v


def test_force_skips_samples_whose_cl_neighbor_may_take_the_cluster():
    inst = inst_of([[0.0], [0.1]], 2, edges=[(0, 1)])
    region = CentroidRegion([[0.0], [5.0]], [[0.2], [6.0]])
    v = ViableSets.full(2, 2)
    assert force_assignments(v, region, inst) == v


def test_propagate_single_remaining():
    inst = inst_of([[0.0], [1.0]], 2, edges=[(0, 1)])
    out = propagate_links(ViableSets([[False, True], [True, True]]), inst)
    np.testing.assert_array_equal(out.mask, [[False, True], [True, False]])
    assert list(out.forced) == [1, 0]


def test_propagate_conflict():
    inst = inst_of([[0.0], [1.0]], 2, edges=[(0, 1)])
    with pytest.raises(NodeInfeasible):
        propagate_links(ViableSets([[True, False], [True, False]]), inst)


def test_propagate_chain():
    inst = inst_of([[0.0], [1.0], [2.0]], 2, edges=[(0, 1), (1, 2)])
    out = propagate_links(ViableSets([[True, False], [True, True], [True, True]]), inst)
    assert list(out.forced) == [0, 1, 0]


def test_propagate_idempotent():
    rng = np.random.default_rng(2)
    inst = inst_of(rng.normal(size=(6, 1)), 3, edges=[(0, 1), (1, 2), (3, 4), (2, 5)])
    mask = np.ones((6, 3), bool)
    mask[0] = [True, False, False]
    mask[3] = [False, True, False]
    once = propagate_links(ViableSets(mask), inst)
    assert propagate_links(once, inst) == once


def test_hull_tighten_clips_to_viable_points():
    inst = inst_of([[0, 0], [1, 5], [4, 2]], 2)
    region = root_region(inst)
    mask = np.array([[True, False], [True, False], [False, True]])
    out = hull_tighten(region, ViableSets(mask), inst)
    np.testing.assert_array_equal(out.lower, [[0, 0], [4, 2]])
    np.testing.assert_array_equal(out.upper, [[1, 5], [4, 2]])


def test_hull_tighten_skipped_when_fewer_samples_than_clusters():
    inst = inst_of([[0, 0]], 2)
    region = CentroidRegion([[-1, -1], [-1, -1]], [[1, 1], [1, 1]])
    assert hull_tighten(region, ViableSets.full(1, 2), inst) is region
