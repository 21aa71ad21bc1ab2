"""Brute-force reference solvers for tiny instances.

Nothing here shares code with the bounding or search modules; the oracle has
to stay obviously correct.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import TooLarge
from .model import CentroidRegion, CollapsedInstance, ConstraintSet, Dataset, Solution

MAX_ASSIGNMENTS = 10**7
CHUNK = 1 << 16


def _problem(problem):
    if isinstance(problem, CollapsedInstance):
        return problem.points, problem.weights.astype(float), np.zeros((0, 2), int), problem.cl_edges, problem.constant
    data, cons = problem
    if not isinstance(cons, ConstraintSet):
        cons = ConstraintSet(*cons)
    ml = np.array(cons.ml_pairs, dtype=np.int64).reshape(-1, 2)
    cl = np.array(cons.cl_pairs, dtype=np.int64).reshape(-1, 2)
    pts = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    return pts, np.ones(len(pts)), ml, cl, 0.0


def _digits(start, stop, n, k):
    """Assignments number start..stop-1 in lexicographic order, most significant sample first."""
    codes = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(codes), n), dtype=np.int64)
    for pos in range(n - 1, -1, -1):
        out[:, pos] = codes % k
        codes //= k
    return out


def brute_force(problem, k: int):
    """Optimal cost and one optimal labeling by full enumeration of K^n assignments.

    ``problem`` is either a :class:`CollapsedInstance` (cannot-link edges only,
    constant added) or a ``(Dataset, ConstraintSet)`` pair.
    """
    X, w, ml, cl, constant = _problem(problem)
    n = len(X)
    total = k**n
    if total > MAX_ASSIGNMENTS:
        raise TooLarge(f"{k}^{n} assignments exceeds the enumeration limit")
    Xc = X - X.mean(axis=0)
    base = float(w @ (Xc * Xc).sum(axis=1))
    best_cost, best_a = np.inf, None
    for start in range(0, total, CHUNK):
        A = _digits(start, min(start + CHUNK, total), n, k)
        ok = np.ones(len(A), dtype=bool)
        for i, j in ml:
            ok &= A[:, i] == A[:, j]
        for i, j in cl:
            ok &= A[:, i] != A[:, j]
        if not ok.any():
            continue
        A = A[ok]
        onehot = A[:, :, None] == np.arange(k)
        W = np.einsum("s,ask->ak", w, onehot)
        S = np.einsum("s,sd,ask->akd", w, Xc, onehot)
        gain = np.divide((S * S).sum(axis=2), W, out=np.zeros_like(W), where=W > 0).sum(axis=1)
        cost = base - gain
        i = int(np.argmin(cost))
        if cost[i] < best_cost - 1e-12 * max(1.0, abs(best_cost) if np.isfinite(best_cost) else 1.0):
            best_cost, best_a = cost[i], A[i].copy()
    if best_a is None:
        return np.inf, None
    centroids = np.tile(X.mean(axis=0), (k, 1))
    for c in range(k):
        sel = best_a == c
        if sel.any():
            centroids[c] = (w[sel] @ X[sel]) / w[sel].sum()
    diff = X - centroids[best_a]
    cost = float(w @ (diff * diff).sum(axis=1)) + constant
    return cost, Solution(centroids, best_a, cost, True)


def _axis_grid(lo, hi, step):
    if hi - lo <= 0:
        return np.array([lo])
    count = int(math.ceil((hi - lo) / step)) + 1
    return np.linspace(lo, hi, count)


def brute_force_in_region(inst: CollapsedInstance, k: int, region: CentroidRegion, grid_step: float, mask=None):
    """Dense-grid estimate of the best cost with centroids restricted to ``region``.

    Returns ``(value, slack)``. Grid points lie inside the region, so
    ``value`` is an upper bound on the restricted optimum and
    ``value - slack`` a lower bound. Cannot-link edges are enforced by
    enumerating assignments when n <= 10 and ignored otherwise.
    """
    X, w = inst.points, inst.weights.astype(float)
    n, d = X.shape
    mask = np.ones((n, k), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    grids, radius = [], []
    for c in range(k):
        axes = [_axis_grid(region.lower[c, i], region.upper[c, i], grid_step) for i in range(d)]
        grids.append(np.array(list(itertools.product(*axes))))
        spacing = [(a[1] - a[0]) if len(a) > 1 else 0.0 for a in axes]
        radius.append(0.5 * math.sqrt(sum(s * s for s in spacing)))
    # D[c][s, g] = |x_s - grid point g of cluster c|^2
    D = [((X[:, None, :] - g[None]) ** 2).sum(axis=2) for g in grids]
    far = np.stack(
        [np.maximum((X - region.lower[c]) ** 2, (X - region.upper[c]) ** 2).sum(axis=1) for c in range(k)], axis=1
    )
    slack = float(w @ (2 * np.array(radius)[None] * np.sqrt(far)).max(axis=1))

    if n <= 10:
        work = k**n * n * sum(len(g) for g in grids)
        if work > 10**9:
            raise TooLarge("grid oracle workload too large")
        best = np.inf
        for A in (_digits(s, min(s + CHUNK, k**n), n, k) for s in range(0, k**n, CHUNK)):
            ok = np.all(mask[np.arange(n), A], axis=1)
            for i, j in inst.cl_edges:
                ok &= A[:, i] != A[:, j]
            A = A[ok]
            if not len(A):
                continue
            cost = np.zeros(len(A))
            for c in range(k):
                cost += (((A == c) * w) @ D[c]).min(axis=1)
            best = min(best, float(cost.min()))
        return best + inst.constant, slack

    sizes = [len(g) for g in grids]
    if math.prod(sizes) > 10**7:
        raise TooLarge("grid oracle has too many centroid tuples")
    big = np.where(mask[:, :, None], 0.0, np.inf)
    best = np.inf
    for combo in itertools.product(*(range(s) for s in sizes)):
        vals = np.stack([D[c][:, combo[c]] for c in range(k)], axis=1) + big[:, :, 0]
        best = min(best, float(w @ vals.min(axis=1)))
    return best + inst.constant, slack
