"""Feasible-solution generators: weighted k-means++ seeding and COP-k-means."""
from __future__ import annotations

import numpy as np

from .bounds import color_assign, sq_dist_matrix, weighted_means
from .errors import AssignmentBlocked
from .model import CollapsedInstance, Solution


def kmeanspp_seed(inst: CollapsedInstance, k: int, rng: np.random.Generator) -> np.ndarray:
    X = inst.points
    w = inst.weights.astype(float)
    centers = np.empty((k, inst.d))
    first = rng.choice(inst.n, p=w / w.sum())
    centers[0] = X[first]
    closest = sq_dist_matrix(X, centers[:1])[:, 0]
    for j in range(1, k):
        p = w * closest
        total = p.sum()
        # every point already coincides with a center: fall back to weight-proportional picks
        idx = rng.choice(inst.n, p=p / total if total > 0 else w / w.sum())
        centers[j] = X[idx]
        closest = np.minimum(closest, sq_dist_matrix(X, centers[j : j + 1])[:, 0])
    return centers


def _cost(inst, mu, a):
    return inst.constant + float(inst.weights @ sq_dist_matrix(inst.points, mu)[np.arange(inst.n), a])


def cop_kmeans(inst: CollapsedInstance, k: int, rng: np.random.Generator, max_iters: int = 100, trace=None):
    """One COP-k-means run from a k-means++ start.

    Raises :class:`AssignmentBlocked` when the greedy assignment pass leaves
    some sample without an admissible cluster. ``trace``, when given,
    receives the objective after every accepted iteration.
    """
    mu = kmeanspp_seed(inst, k, rng)
    a, _ = color_assign(inst, mu)
    if a is None:
        raise AssignmentBlocked("no admissible cluster for some sample in the first pass")
    mu = weighted_means(inst, a, mu)
    best = Solution(mu, a, _cost(inst, mu, a), True)
    if trace is not None:
        trace.append(best.objective)
    for _ in range(max_iters):
        b, _ = color_assign(inst, best.centroids)
        if b is None:
            break
        if np.array_equal(b, best.assignment):
            break
        mu = weighted_means(inst, b, best.centroids)
        cost = _cost(inst, mu, b)
        if cost >= best.objective:
            break
        best = Solution(mu, b, cost, True)
        if trace is not None:
            trace.append(cost)
    return best


def multi_restart(inst: CollapsedInstance, k: int, restarts: int, seed: int, max_iters: int = 100):
    """Best feasible COP-k-means result over independent restarts, or None."""
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        try:
            sol = cop_kmeans(inst, k, np.random.default_rng(child), max_iters)
        except AssignmentBlocked:
            continue
        if best is None or sol.objective < best.objective:
            best = sol
    return best
