"""Box-distance primitives and the sample-determination rules applied per node.

Viable sets are stored as an ``(n, K)`` boolean matrix: ``mask[s, k]`` is true
while cluster ``k`` is still admissible for pseudo-sample ``s``. A sample is
forced exactly when its row has a single true entry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NodeInfeasible
from .model import CentroidRegion, CollapsedInstance


@dataclass(frozen=True, eq=False)
class ViableSets:
    mask: np.ndarray

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def full(cls, n: int, k: int) -> "ViableSets":
        return cls(np.ones((n, k), dtype=bool))

    @property
    def forced(self) -> np.ndarray:
        """Forced cluster per sample, -1 where more than one cluster is viable."""
        counts = self.mask.sum(axis=1)
        return np.where(counts == 1, self.mask.argmax(axis=1), -1)

    def __eq__(self, other):
        return isinstance(other, ViableSets) and np.array_equal(self.mask, other.mask)


def root_region(inst: CollapsedInstance) -> CentroidRegion:
    lo = inst.points.min(axis=0)
    hi = inst.points.max(axis=0)
    return CentroidRegion(np.tile(lo, (inst.k, 1)), np.tile(hi, (inst.k, 1)))


def d_min(x, box) -> float:
    l, u = (np.asarray(b, dtype=float) for b in box)
    x = np.asarray(x, dtype=float)
    gap = np.maximum(np.maximum(l - x, 0.0), x - u)
    return float(gap @ gap)


def d_max(x, box) -> float:
    l, u = (np.asarray(b, dtype=float) for b in box)
    x = np.asarray(x, dtype=float)
    return float(np.maximum((x - l) ** 2, (x - u) ** 2).sum())


def dmin_matrix(points, region: CentroidRegion) -> np.ndarray:
    """Squared distance from every point to every box, shape (n, K)."""
    x = points[:, None, :]
    gap = np.maximum(np.maximum(region.lower[None] - x, 0.0), x - region.upper[None])
    return np.einsum("skd,skd->sk", gap, gap)


def dmax_matrix(points, region: CentroidRegion) -> np.ndarray:
    x = points[:, None, :]
    far = np.maximum(np.abs(x - region.lower[None]), np.abs(x - region.upper[None]))
    return np.einsum("skd,skd->sk", far, far)


def _check_nonempty(mask):
    empty = ~mask.any(axis=1)
    if empty.any():
        raise NodeInfeasible(f"sample {int(np.argmax(empty))} has no viable cluster")


def eliminate_assignments(
    viable: ViableSets,
    region: CentroidRegion,
    inst: CollapsedInstance,
    incumbent: float,
    paper_rho_rule: bool = False,
    rho: float | None = None,
    terms: np.ndarray | None = None,
    base: float | None = None,
) -> ViableSets:
    """Drop (sample, cluster) pairs that cannot appear in a solution beating ``incumbent``.

    The default test fixes ``s`` to ``k`` inside a separable lower bound
    ``base + sum_s min_{k in mask} terms[s, k]`` and drops ``k`` when the result
    exceeds the incumbent. Without explicit ``terms`` the per-sample box
    distances ``w_s * d_min`` and ``base = constant`` are used.
    """
    if not np.isfinite(incumbent):
        return viable
    mask = viable.mask.copy()
    if terms is None:
        terms = inst.weights[:, None] * dmin_matrix(inst.points, region)
        base = inst.constant
    masked = np.where(mask, terms, np.inf)
    best = masked.min(axis=1)
    lb = base + best.sum()
    drop = mask & (lb - best[:, None] + terms > incumbent)
    if paper_rho_rule and rho is not None:
        drop |= mask & (dmin_matrix(inst.points, region) > rho)
    if drop.any():
        mask &= ~drop
        _check_nonempty(mask)
        return ViableSets(mask)
    return viable


def force_assignments(viable: ViableSets, region: CentroidRegion, inst: CollapsedInstance) -> ViableSets:
    """Fix samples whose farthest point in one box beats the nearest point of every other box.

    A sample with a cannot-link neighbor that may still take the winning
    cluster is left alone: moving it there could break feasibility, so the
    geometric argument does not apply.
    """
    mask = viable.mask
    multi = mask.sum(axis=1) > 1
    if not multi.any():
        return viable
    dmax = np.where(mask, dmax_matrix(inst.points, region), np.inf)
    dmin = np.where(mask, dmin_matrix(inst.points, region), np.inf)
    winner = dmax.argmin(axis=1)
    rows = np.arange(inst.n)
    others = dmin.copy()
    others[rows, winner] = np.inf
    ok = multi & (dmax[rows, winner] < others.min(axis=1))
    if len(inst.cl_edges) and ok.any():
        a, b = inst.cl_edges[:, 0], inst.cl_edges[:, 1]
        blocked = np.zeros(inst.n, dtype=bool)
        np.logical_or.at(blocked, a, mask[b, winner[a]])
        np.logical_or.at(blocked, b, mask[a, winner[b]])
        ok &= ~blocked
    if not ok.any():
        return viable
    new = mask.copy()
    new[ok] = False
    new[rows[ok], winner[ok]] = True
    return ViableSets(new)


def propagate_links(viable: ViableSets, inst: CollapsedInstance) -> ViableSets:
    """Remove a forced sample's cluster from its cannot-link neighbors, to a fixed point."""
    if not len(inst.cl_edges):
        _check_nonempty(viable.mask)
        return viable
    mask = viable.mask.copy()
    a, b = inst.cl_edges[:, 0], inst.cl_edges[:, 1]
    changed = False
    while True:
        _check_nonempty(mask)
        single = mask.sum(axis=1) == 1
        fa = np.where(single, mask.argmax(axis=1), -1)
        clash = (fa[a] >= 0) & (fa[a] == fa[b])
        if clash.any():
            e = int(np.argmax(clash))
            raise NodeInfeasible(f"cannot-link ({a[e]}, {b[e]}) both forced to cluster {fa[a[e]]}")
        hit_b = (fa[a] >= 0) & mask[b, np.maximum(fa[a], 0)]
        hit_a = (fa[b] >= 0) & mask[a, np.maximum(fa[b], 0)]
        if not (hit_a.any() or hit_b.any()):
            break
        mask[b[hit_b], fa[a[hit_b]]] = False
        mask[a[hit_a], fa[b[hit_a]]] = False
        changed = True
    return ViableSets(mask) if changed else viable


def determine(
    viable: ViableSets,
    region: CentroidRegion,
    inst: CollapsedInstance,
    incumbent: float,
    paper_rho_rule: bool = False,
    rho: float | None = None,
    max_rounds: int = 4,
) -> ViableSets:
    """Alternate elimination, forcing and propagation until nothing changes."""
    for _ in range(max_rounds):
        nxt = eliminate_assignments(viable, region, inst, incumbent, paper_rho_rule, rho)
        nxt = force_assignments(nxt, region, inst)
        nxt = propagate_links(nxt, inst)
        if nxt == viable:
            break
        viable = nxt
    return viable


def hull_tighten(region: CentroidRegion, viable: ViableSets, inst: CollapsedInstance):
    """Shrink each box to the bounding box of the samples that may still join it.

    Moving any sample into an empty cluster never raises the cost, so when
    there are at least K samples some optimal solution has every centroid at
    the mean of a nonempty cluster, inside that hull. Returns None when a box
    becomes empty.
    """
    if inst.n < inst.k:
        return region
    mask = viable.mask
    X = inst.points
    big = np.inf
    lo_h = np.where(mask[:, :, None], X[:, None, :], big).min(axis=0)
    hi_h = np.where(mask[:, :, None], X[:, None, :], -big).max(axis=0)
    lo = np.maximum(region.lower, lo_h)
    hi = np.minimum(region.upper, hi_h)
    if np.any(lo > hi):
        return None
    if np.array_equal(lo, region.lower) and np.array_equal(hi, region.upper):
        return region
    return CentroidRegion(lo, hi)
