"""Node lower and upper bounds.

Every lower bound here includes the collapse constant, so values compare
directly against solution objectives.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import GroupInfeasible, NodeInfeasible, PreconditionViolated
from .geometry import ViableSets, dmin_matrix
from .model import CentroidRegion, CollapsedInstance, Solution, SolverConfig


def lower_bound_basic(inst: CollapsedInstance, region: CentroidRegion, viable: ViableSets) -> float:
    terms = np.where(viable.mask, dmin_matrix(inst.points, region), np.inf)
    return inst.constant + float(inst.weights @ terms.min(axis=1))


@dataclass
class SplitBound:
    value: float
    terms: np.ndarray
    base: float
    centroids: np.ndarray
    labels: np.ndarray = None


def _cannot_link_stars(inst, terms, mask):
    """Greedy vertex-disjoint stars of cannot-link edges between unforced samples.

    Centers are tried in order of how many neighbors currently share their
    preferred cluster, so the most violated edges are covered first. Returns
    ``(centers, leaves, owner)`` with ``owner[i]`` the star index of ``leaves[i]``.
    """
    empty = np.zeros(0, dtype=np.int64)
    e = inst.cl_edges
    if not len(e):
        return empty, empty, empty
    free = mask.sum(axis=1) > 1
    e = e[free[e[:, 0]] & free[e[:, 1]]]
    if not len(e):
        return empty, empty, empty
    pick = terms.argmin(axis=1)
    clash = (pick[e[:, 0]] == pick[e[:, 1]]).astype(int)
    both = np.concatenate([e, e[:, ::-1]])
    score = np.zeros(inst.n, dtype=int)
    np.add.at(score, both[:, 0], 2 * np.concatenate([clash, clash]) + 1)
    adj = {}
    for u, v in both.tolist():
        adj.setdefault(u, []).append(v)
    used = np.zeros(inst.n, dtype=bool)
    centers, leaves, owner = [], [], []
    for c in sorted(adj, key=lambda u: (-score[u], u)):
        if used[c]:
            continue
        star = [v for v in adj[c] if not used[v]]
        if not star:
            continue
        used[c] = True
        used[star] = True
        owner.extend([len(centers)] * len(star))
        centers.append(c)
        leaves.extend(star)
    return np.array(centers, dtype=np.int64), np.array(leaves, dtype=np.int64), np.array(owner, dtype=np.int64)


def lower_bound_forced_split(
    inst: CollapsedInstance, region: CentroidRegion, viable: ViableSets, star_links: bool = True
) -> SplitBound:
    """Bound that keeps every forced sample coupled to its cluster centroid.

    The forced samples of cluster k contribute ``W_k * |mu_k - xbar_k|^2``
    plus their scatter. That quadratic is shared out among the unforced
    samples in proportion to their weight, and each unforced sample then
    minimizes its share plus its own nearest-centroid cost independently.
    Splitting one minimization into independent ones can only lower the
    value, so the sum is a valid bound; it never drops below the basic bound.

    ``terms`` holds the per-sample pieces (``inf`` outside the viable set,
    0 on a forced sample's cluster) so that elimination can reuse them.
    With ``star_links`` each star of a vertex-disjoint cover of cannot-link
    edges picks its clusters jointly, with every leaf kept off its center's
    cluster; this only raises the value. ``labels`` is the minimizing labeling.
    """
    K, d = inst.k, inst.d
    mask = viable.mask
    X, w = inst.points, inst.weights.astype(float)
    lo, hi = region.lower, region.upper
    count = mask.sum(axis=1)
    forced = count == 1
    fk = mask.argmax(axis=1)

    W = np.bincount(fk[forced], weights=w[forced], minlength=K)
    S = np.zeros((K, d))
    np.add.at(S, fk[forced], w[forced, None] * X[forced])
    xbar = np.divide(S, W[:, None], out=np.zeros_like(S), where=W[:, None] > 0)
    diff = X[forced] - xbar[fk[forced]]
    scatter = float(w[forced] @ np.einsum("ij,ij->i", diff, diff))
    gap = np.maximum(np.maximum(lo - xbar, 0.0), xbar - hi)
    pull = W * np.einsum("kd,kd->k", gap, gap)
    centroids = np.where(W[:, None] > 0, np.clip(xbar, lo, hi), 0.5 * (lo + hi))

    base = inst.constant + scatter
    terms = np.full((inst.n, K), np.inf)
    terms[forced, fk[forced]] = 0.0
    free = ~forced
    if not free.any():
        return SplitBound(base + float(pull.sum()), terms, base, centroids, fk)

    wf = w[free]
    share = wf / wf.sum()
    a = share[:, None] * W[None, :]
    tot = a + wf[:, None]
    m = (a[:, :, None] * xbar[None] + wf[:, None, None] * X[free][:, None, :]) / tot[:, :, None]
    g = np.maximum(np.maximum(lo[None] - m, 0.0), m - hi[None])
    dx = xbar[None] - X[free][:, None, :]
    t = tot * np.einsum("skd,skd->sk", g, g)
    t += a * wf[:, None] / tot * np.einsum("skd,skd->sk", dx, dx)
    t += share[:, None] * (pull.sum() - pull[None, :])
    t = np.where(mask[free], t, np.inf)
    terms[free] = t
    labels = terms.argmin(axis=1)
    value = base + float(t.min(axis=1).sum())
    if star_links:
        centers, leaves, owner = _cannot_link_stars(inst, terms, mask)
        if len(centers):
            # each leaf's best cost once its center's cluster is off limits
            order = np.argsort(terms[leaves], axis=1)
            lt = np.take_along_axis(terms[leaves], order[:, :2], axis=1)
            away = np.where(order[:, :1] == np.arange(K)[None], lt[:, 1:2], lt[:, :1])
            joint = terms[centers].copy()
            np.add.at(joint, owner, away)
            pick = joint.argmin(axis=1)
            best = joint[np.arange(len(centers)), pick]
            if not np.all(np.isfinite(best)):
                raise NodeInfeasible("a cannot-link star has no admissible labeling")
            own = terms[centers, labels[centers]].sum() + terms[leaves, labels[leaves]].sum()
            value += float(best.sum() - own)
            labels[centers] = pick
            taken = pick[owner]
            labels[leaves] = np.where(order[:, 0] == taken, order[:, 1], order[:, 0])
    return SplitBound(value, terms, base, centroids, labels)


def exact_region_value(inst: CollapsedInstance, region: CentroidRegion, viable: ViableSets, max_enum: int):
    """Exact node value by enumerating the labelings left open by the viable sets.

    With the labeling fixed, the centroid problem separates per cluster and its
    box-constrained minimizer is the clamped weighted mean. Returns
    ``(value, labels, centroids)``, ``(inf, None, None)`` when no labeling
    survives the cannot-links, or None when more than ``max_enum`` labelings
    remain open.
    """
    mask = viable.mask
    counts = mask.sum(axis=1)
    if np.any(counts == 0):
        return np.inf, None, None
    free = np.flatnonzero(counts > 1)
    if float(np.log(counts[free]).sum()) > np.log(max_enum) + 1e-9:
        return None
    K = inst.k
    shift = inst.points.mean(axis=0)
    X = inst.points - shift
    lo, hi = region.lower - shift, region.upper - shift
    w = inst.weights.astype(float)
    forced = viable.forced
    options = [np.flatnonzero(mask[s]) for s in free]
    A = np.array(list(itertools.product(*options)), dtype=np.int64) if len(free) else np.zeros((1, 0), np.int64)
    labels = np.tile(forced, (len(A), 1))
    labels[:, free] = A
    if len(inst.cl_edges):
        ok = np.all(labels[:, inst.cl_edges[:, 0]] != labels[:, inst.cl_edges[:, 1]], axis=1)
        labels = labels[ok]
        if not len(labels):
            return np.inf, None, None
    onehot = (labels[:, :, None] == np.arange(K)).astype(float)
    W = np.einsum("s,ask->ak", w, onehot)
    S = np.einsum("s,sd,ask->akd", w, X, onehot)
    mean = np.divide(S, W[:, :, None], out=np.zeros_like(S), where=W[:, :, None] > 0)
    mu = np.clip(mean, lo[None], hi[None])
    Q = float(w @ (X * X).sum(axis=1))
    vals = Q + np.einsum("ak,akd->a", W, mu * mu) - 2 * np.einsum("akd,akd->a", S, mu)
    i = int(np.argmin(vals))
    cents = np.where(W[i][:, None] > 0, mu[i], 0.5 * (lo + hi)) + shift
    return inst.constant + max(float(vals[i]), 0.0), labels[i].copy(), cents


@dataclass(frozen=True)
class Grouping:
    groups: tuple

    @property
    def size(self) -> int:
        return len(self.groups)


def build_grouping(inst: CollapsedInstance, group_size_max: int) -> Grouping:
    """Pack cannot-link components into shared groups first, then the rest in index order."""
    placed = np.zeros(inst.n, dtype=bool)
    groups = []
    adj = inst.neighbors
    for start in range(inst.n):
        if placed[start] or not adj[start]:
            continue
        # breadth-first walk keeps linked samples next to each other
        order, queue = [], [start]
        placed[start] = True
        while queue:
            v = queue.pop(0)
            order.append(v)
            for u in adj[v]:
                if not placed[u]:
                    placed[u] = True
                    queue.append(u)
        groups.extend(order[i : i + group_size_max] for i in range(0, len(order), group_size_max))
    rest = np.flatnonzero(~placed).tolist()
    groups.extend(rest[i : i + group_size_max] for i in range(0, len(rest), group_size_max))
    return Grouping(tuple(tuple(g) for g in groups))


class GroupTables:
    """Per-grouping enumeration tables that do not depend on the node."""

    def __init__(self, inst: CollapsedInstance, grouping: Grouping):
        K = inst.k
        G = grouping.size
        g = max(len(x) for x in grouping.groups)
        self.idx = np.full((G, g), -1, dtype=np.int64)
        for i, grp in enumerate(grouping.groups):
            self.idx[i, : len(grp)] = grp
        self.pad = self.idx < 0
        self.table = np.array(list(itertools.product(range(K), repeat=g)), dtype=np.int64).reshape(-1, g)
        onehot = (self.table[:, :, None] == np.arange(K)).astype(float)
        safe = np.where(self.pad, 0, self.idx)
        wpad = np.where(self.pad, 0.0, inst.weights[safe].astype(float))
        # expanded quadratics lose precision far from the origin, so work in centered coordinates
        self.shift = inst.points.mean(axis=0)
        xc = inst.points - self.shift
        xpad = xc[safe] * wpad[:, :, None]
        self.W = np.einsum("gm,amk->gak", wpad, onehot)
        self.S = np.einsum("gmd,amk->gakd", xpad, onehot)
        self.Q = np.einsum("gm,amk->gak", wpad * np.einsum("ij,ij->i", xc, xc)[safe], onehot)
        self.gweight = wpad.sum(axis=1)
        # padded slots may only take cluster 0, so each real assignment appears once
        self.static_valid = np.ones((G, len(self.table)), dtype=bool)
        for p in range(g):
            rows = self.pad[:, p]
            self.static_valid[rows] &= (self.table[:, p] == 0)[None, :]
        pos = {int(v): (gi, p) for gi, grp in enumerate(grouping.groups) for p, v in enumerate(grp)}
        for a, b in inst.cl_edges:
            if int(a) not in pos or int(b) not in pos:
                continue
            ga, pa = pos[int(a)]
            gb, pb = pos[int(b)]
            if ga == gb:
                self.static_valid[ga] &= self.table[:, pa] != self.table[:, pb]

    def valid(self, viable: ViableSets) -> np.ndarray:
        safe = np.where(self.pad, 0, self.idx)
        mrows = viable.mask[safe]
        mrows[self.pad] = True
        # ok[g, a] = all members m have mask[idx[g, m], table[a, m]]
        ok = self.static_valid.copy()
        for p in range(self.idx.shape[1]):
            ok &= mrows[:, p, :][:, self.table[:, p]]
        return ok


def _solve_groups(tables: GroupTables, region: CentroidRegion, valid: np.ndarray, c: np.ndarray):
    lo, hi = (region.lower - tables.shift)[None, None], (region.upper - tables.shift)[None, None]
    W = tables.W[..., None]
    cc = c[:, None]
    corner = np.where(cc > 0, lo, hi)
    corner = np.where(cc == 0, lo, corner)
    target = np.divide(2 * tables.S - cc, 2 * W, out=np.zeros_like(tables.S), where=W > 0)
    mu = np.where(W > 0, np.clip(target, lo, hi), corner)
    val = tables.Q - 2 * np.einsum("gakd,gakd->gak", tables.S, mu)
    val += tables.W * np.einsum("gakd,gakd->gak", mu, mu)
    val += np.einsum("gkd,gakd->gak", c, mu)
    val = np.where(valid, val.sum(axis=2), np.inf)
    best = val.argmin(axis=1)
    rows = np.arange(len(best))
    values = val[rows, best]
    if not np.all(np.isfinite(values)):
        g = int(np.argmax(~np.isfinite(values)))
        raise GroupInfeasible(f"group {g} has no assignment compatible with its viable sets")
    values = values + np.einsum("gkd,d->g", c, tables.shift)
    return values, mu[rows, best] + tables.shift, best


def solve_group_subproblem(inst, group, region, viable, c):
    """Exact minimum of one group's relaxed subproblem with linear term ``c``.

    Returns (value, centroids K x d, cluster per group member).
    """
    tables = GroupTables(inst, Grouping((tuple(group),)))
    valid = tables.valid(viable)
    values, mu, best = _solve_groups(tables, region, valid, np.asarray(c, dtype=float)[None])
    return float(values[0]), mu[0], tables.table[best[0], : len(group)].copy()


def lower_bound_lagrangian(inst, region, viable, grouping, config: SolverConfig, tables=None, labelings=None):
    """Subgradient ascent on the grouped decomposition dual.

    Returns the best dual value seen (constant included) and one centroid
    candidate per evaluation, each clamped into the region. When
    ``labelings`` is a list, the joint labeling picked by the subproblems at
    the best dual value is appended to it.
    """
    tables = tables or GroupTables(inst, grouping)
    try:
        valid = tables.valid(viable)
    except IndexError:
        raise NodeInfeasible("grouping does not match instance")
    G = grouping.size
    K, d = inst.k, inst.d
    lam = np.zeros((max(G - 1, 0), K, d))
    best = -np.inf
    candidates = []
    mid = region.midpoint()
    for t in range(config.ld_iterations + 1):
        c = np.zeros((G, K, d))
        if G > 1:
            c[:-1] += lam
            c[1:] -= lam
        values, mu, chosen = _solve_groups(tables, region, valid, c)
        value = inst.constant + float(values.sum())
        if value > best:
            best, best_chosen = value, chosen
        wk = tables.W[np.arange(G), chosen]
        tot = wk.sum(axis=0)
        avg = np.divide(np.einsum("gk,gkd->kd", wk, mu), tot[:, None], out=mid.copy(), where=tot[:, None] > 0)
        candidates.append(region.clamp(avg))
        if G == 1 or t == config.ld_iterations:
            break
        lam += (config.ld_step0 / (t + 1)) * (mu[:-1] - mu[1:])
    if labelings is not None:
        rows = tables.table[best_chosen]
        labels = np.empty(inst.n, dtype=np.int64)
        real = ~tables.pad
        labels[tables.idx[real]] = rows[real]
        labelings.append(labels)
    return best, candidates


def sq_dist_matrix(points, centroids) -> np.ndarray:
    diff = points[:, None, :] - np.asarray(centroids)[None]
    return np.einsum("skd,skd->sk", diff, diff)


def color_assign(inst: CollapsedInstance, centroids):
    """Nearest-centroid labeling repaired greedily along the cannot-link graph.

    Returns (assignment, squared-distance matrix) or (None, matrix) when some
    sample finds every cluster already taken by its neighbors.
    """
    D = sq_dist_matrix(inst.points, centroids)
    a = D.argmin(axis=1)
    if not len(inst.cl_edges):
        return a, D
    e = inst.cl_edges
    if not np.any(a[e[:, 0]] == a[e[:, 1]]):
        return a, D
    adj = inst.neighbors
    done = np.zeros(inst.n, dtype=bool)
    for s in inst.coloring_order:
        if not adj[s]:
            break
        row = D[s].copy()
        for u in adj[s]:
            if done[u]:
                row[a[u]] = np.inf
        k = int(row.argmin())
        if not np.isfinite(row[k]):
            return None, D
        a[s] = k
        done[s] = True
    return a, D


def upper_bound_kcoloring(inst: CollapsedInstance, candidates):
    best_cost, best_sol = np.inf, None
    for mu in candidates:
        mu = np.asarray(mu, dtype=float)
        a, D = color_assign(inst, mu)
        if a is None:
            continue
        cost = inst.constant + float(inst.weights @ D[np.arange(inst.n), a])
        if cost < best_cost:
            best_cost, best_sol = cost, Solution(mu, a, cost, True)
    return best_cost, best_sol


def upper_bound_ml_closed_form(inst: CollapsedInstance, mu):
    if len(inst.cl_edges):
        raise PreconditionViolated("closed-form bound requires an instance without cannot-link edges")
    mu = np.asarray(mu, dtype=float)
    D = sq_dist_matrix(inst.points, mu)
    a = D.argmin(axis=1)
    cost = inst.constant + float(inst.weights @ D[np.arange(inst.n), a])
    return cost, Solution(mu, a, cost, True)


def weighted_means(inst: CollapsedInstance, assignment, fallback):
    K = fallback.shape[0]
    W = np.bincount(assignment, weights=inst.weights, minlength=K)
    S = np.zeros_like(fallback, dtype=float)
    np.add.at(S, assignment, inst.weights[:, None] * inst.points)
    return np.divide(S, W[:, None], out=np.array(fallback, dtype=float), where=W[:, None] > 0)


def labeling_solution(inst: CollapsedInstance, assignment, fallback):
    """Solution with centroids at cluster means, or None if the labeling breaks a cannot-link."""
    a = np.asarray(assignment)
    if len(inst.cl_edges) and np.any(a[inst.cl_edges[:, 0]] == a[inst.cl_edges[:, 1]]):
        return None
    mu = weighted_means(inst, a, fallback)
    cost = inst.constant + float(inst.weights @ sq_dist_matrix(inst.points, mu)[np.arange(inst.n), a])
    return Solution(mu, a, cost, True)


def polish_lloyd_constrained(inst: CollapsedInstance, sol: Solution, max_iters: int) -> Solution:
    """Constrained Lloyd descent from a feasible solution; never returns a worse one."""
    best = sol
    if max_iters <= 0:
        return best
    a = np.asarray(sol.assignment)
    mu = weighted_means(inst, a, np.asarray(sol.centroids, dtype=float))
    cost = labeling_cost(inst, mu, a)
    if cost < best.objective:
        best = Solution(mu, a, cost, True)
    for _ in range(max_iters):
        b, _ = color_assign(inst, best.centroids)
        if b is None:
            break
        mu = weighted_means(inst, b, best.centroids)
        cost = labeling_cost(inst, mu, b)
        if not cost < best.objective * (1 - 1e-12):
            break
        best = Solution(mu, b, cost, True)
    return best


def labeling_cost(inst, mu, a):
    return inst.constant + float(inst.weights @ sq_dist_matrix(inst.points, mu)[np.arange(inst.n), a])
