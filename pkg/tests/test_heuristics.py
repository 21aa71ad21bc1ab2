import numpy as np
import pytest

from pcbb.bounds import sq_dist_matrix
from pcbb.errors import AssignmentBlocked
from pcbb.heuristics import cop_kmeans, kmeanspp_seed, multi_restart
from pcbb.model import CollapsedInstance
from pcbb.oracle import brute_force
from pcbb.preprocess import collapse

from conftest import mean_cost, pairs_ok, random_problem


def inst_of(points, k, edges=()):
    points = np.asarray(points, dtype=float)
    n = len(points)
    return CollapsedInstance(points, [1] * n, tuple((i,) for i in range(n)), edges, 0.0, k)


def test_seed_single_point():
    inst = inst_of([[2.0, 3.0]], 1)
    np.testing.assert_array_equal(kmeanspp_seed(inst, 1, np.random.default_rng(0)), [[2, 3]])


def test_seed_far_blobs():
    rng = np.random.default_rng(1)
    X = np.concatenate([rng.normal(0, 0.1, size=(20, 2)), rng.normal(100, 0.1, size=(20, 2))])
    inst = inst_of(X, 2)
    hits = 0
    for s in range(100):
        c = kmeanspp_seed(inst, 2, np.random.default_rng(s))
        hits += (c[:, 0] > 50).sum() == 1
    assert hits >= 99


def test_seed_more_clusters_than_points():
    inst = inst_of([[0.0], [1.0]], 4)
    c = kmeanspp_seed(inst, 4, np.random.default_rng(0))
    assert set(c[:, 0]) <= {0.0, 1.0}


def plain_lloyd(X, mu, iters):
    for _ in range(iters):
        a = sq_dist_matrix(X, mu).argmin(axis=1)
        new = mu.copy()
        for k in range(len(mu)):
            if np.any(a == k):
                new[k] = X[a == k].mean(axis=0)
        if np.array_equal(new, mu):
            break
        mu = new
    return a, mu


def test_no_cl_matches_plain_lloyd():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 2))
    inst = inst_of(X, 3)
    sol = cop_kmeans(inst, 3, np.random.default_rng(8))
    start = kmeanspp_seed(inst, 3, np.random.default_rng(8))
    a, _ = plain_lloyd(X, start, 100)
    np.testing.assert_array_equal(sol.assignment, a)
    assert sol.objective == pytest.approx(mean_cost(X, a))


def test_triangle_blocks_every_restart():
    inst = inst_of([[0.0], [1.0], [2.0]], 2, edges=[(0, 1), (1, 2), (0, 2)])
    for s in range(10):
        with pytest.raises(AssignmentBlocked):
            cop_kmeans(inst, 2, np.random.default_rng(s))
    assert multi_restart(inst, 2, 10, 0) is None


def test_f2_restarts_reach_optimum(f2):
    data, cons = f2
    inst = collapse(data, cons, 2)
    best = multi_restart(inst, 2, 100, 0)
    assert best.objective == pytest.approx(606 / 9)


def test_restart_properties():
    rng = np.random.default_rng(2)
    for _ in range(20):
        data, cons, k = random_problem(rng)
        inst = collapse(data, cons, k)
        one = multi_restart(inst, k, 1, 3)
        single = cop_kmeans(inst, k, np.random.default_rng(np.random.SeedSequence(3).spawn(1)[0]))
        assert one.objective == single.objective
        many = multi_restart(inst, k, 100, 3)
        assert many.objective <= one.objective
        oracle, _ = brute_force((data, cons), k)
        assert many.objective >= oracle - 1e-9
        full = inst.expand(many.assignment)
        assert pairs_ok(full, cons)


def test_trace_non_increasing():
    rng = np.random.default_rng(5)
    inst = inst_of(rng.normal(size=(60, 2)), 4, edges=[(0, 1), (2, 3)])
    trace = []
    cop_kmeans(inst, 4, np.random.default_rng(1), trace=trace)
    assert trace and all(b < a for a, b in zip(trace, trace[1:]))
