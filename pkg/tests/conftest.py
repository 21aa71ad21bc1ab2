"""Shared fixtures and independent checkers.

The checkers here deliberately avoid the package's own objective and
feasibility helpers so that tests do not grade the solver with its own code.
"""
import numpy as np
import pytest

from pcbb.model import ConstraintSet, Dataset

ACCEPTANCE = {}


def independent_cost(points, centroids, assignment):
    points = np.asarray(points, dtype=float)
    total = 0.0
    for i, a in enumerate(np.asarray(assignment)):
        diff = points[i] - np.asarray(centroids)[a]
        total += float(sum(v * v for v in diff))
    return total


def mean_cost(points, assignment):
    """SSE with every centroid at its cluster mean, computed cluster by cluster."""
    points = np.asarray(points, dtype=float)
    assignment = np.asarray(assignment)
    total = 0.0
    for c in np.unique(assignment):
        block = points[assignment == c]
        total += float(((block - block.mean(axis=0)) ** 2).sum())
    return total


def pairs_ok(assignment, cons):
    a = list(assignment)
    return all(a[i] == a[j] for i, j in cons.ml_pairs) and all(a[i] != a[j] for i, j in cons.cl_pairs)


def random_problem(rng, n_range=(3, 9), d_range=(1, 3), k_range=(1, 3), max_pairs=4, kinds=("ml", "cl")):
    """Random tiny instance whose constraints come from a planted labeling, so it is always feasible."""
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    d = int(rng.integers(d_range[0], d_range[1] + 1))
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    X = rng.normal(size=(n, d)) * 3
    planted = rng.integers(0, k, size=n)
    ml, cl = set(), set()
    for _ in range(int(rng.integers(0, max_pairs + 1))):
        i, j = sorted(int(v) for v in rng.choice(n, 2, replace=False))
        if planted[i] == planted[j]:
            if "ml" in kinds:
                ml.add((i, j))
        elif "cl" in kinds:
            cl.add((i, j))
    return Dataset(X), ConstraintSet(tuple(sorted(ml)), tuple(sorted(cl))), k


def record(criterion, passed, detail=""):
    ACCEPTANCE[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[c]
        terminalreporter.write_line(f"criterion {c:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def f2():
    """Four points, one cannot-link between the two left ones."""
    return Dataset([[0, 0], [0, 1], [10, 0], [10, 1]]), ConstraintSet((), ((0, 1),))
